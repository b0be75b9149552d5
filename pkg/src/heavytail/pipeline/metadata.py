"""Run manifest collection and persistence for pipelines and their steps."""

import json
import logging
import uuid
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

from heavytail import __version__

MANIFEST_FILE = "manifest.json"


class StepTiming:
    """Captures timing and outcome of a single pipeline step."""

    def __init__(
        self,
        name: str,
        duration: Optional[float] = None,
        start_time: Optional[datetime] = None,
        end_time: Optional[datetime] = None,
        parameters: Optional[Dict[str, Any]] = None,
        result_code: Optional[int] = 0,
        error: Optional[Dict[str, Any]] = None,
    ):
        """Initialize step timing.

        Args:
            name: Name of the step/command
            duration: Wall-clock seconds spent in the step
            start_time: When the step started executing
            end_time: When the step finished executing
            parameters: Values the step reported back (metadata_updates)
        """
        self.name = name
        self.start_time = start_time
        self.end_time = end_time
        self.parameters = parameters or {}
        self.result_code = result_code
        self.error = error

        if duration is not None:
            self.duration = duration
        elif start_time and end_time:
            self.duration = (end_time - start_time).total_seconds()
        else:
            self.duration = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "duration": self.duration,
            "start_time": self.start_time.isoformat() if self.start_time else None,
            "end_time": self.end_time.isoformat() if self.end_time else None,
            "parameters": self.parameters,
            "result_code": self.result_code,
            "error": self.error,
        }


class RunManifest:
    """Everything needed to reproduce a run: resolved config, seed, version, outputs."""

    def __init__(
        self,
        pipeline_name: str,
        start_time: datetime,
        end_time: datetime,
        config_echo: Optional[Dict[str, Any]] = None,
        seed: Optional[int] = None,
        tool_version: str = __version__,
        error: Optional[Dict[str, Any]] = None,
    ):
        self.pipeline_name = pipeline_name
        self.start_time = start_time
        self.end_time = end_time
        self.run_id = str(uuid.uuid4())
        self.config_echo = config_echo or {}
        self.seed = seed
        self.tool_version = tool_version
        self.steps: List[StepTiming] = []
        self.outputs: List[str] = []
        self.results: Dict[str, Any] = {}
        # 0 == success, negative == error, positive == warning (3: tolerance failure)
        self.result_code: Optional[int] = 0
        self.error = error

    @property
    def total_duration(self) -> float:
        return (self.end_time - self.start_time).total_seconds()

    @property
    def timing(self) -> Dict[str, Optional[float]]:
        return {step.name: step.duration for step in self.steps}

    def add_step(self, step: StepTiming) -> None:
        self.steps.append(step)

    def add_output(self, path: str) -> None:
        if path not in self.outputs:
            self.outputs.append(path)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "pipeline_name": self.pipeline_name,
            "run_id": self.run_id,
            "tool_version": self.tool_version,
            "seed": self.seed,
            "config_echo": self.config_echo,
            "start_time": self.start_time.isoformat(),
            "end_time": self.end_time.isoformat(),
            "total_duration": self.total_duration,
            "timing": self.timing,
            "steps": [step.to_dict() for step in self.steps],
            "outputs": list(self.outputs),
            "results": self.results,
            "result_code": self.result_code,
            "error": self.error,
        }


class ManifestCollector:
    """Collects the manifest during pipeline execution."""

    def __init__(self, pipeline_name: str, manifest: Optional[RunManifest] = None):
        self.pipeline_name = pipeline_name
        self.manifest = manifest

    def start_pipeline(self) -> None:
        if self.manifest is None:
            self.manifest = RunManifest(
                pipeline_name=self.pipeline_name,
                start_time=datetime.now(),
                end_time=datetime.now(),
            )

    def end_pipeline(self) -> None:
        if self.manifest:
            self.manifest.end_time = datetime.now()

    def track_step(self, step: StepTiming) -> None:
        if self.manifest:
            self.manifest.add_step(step)

    def get_manifest(self) -> Optional[RunManifest]:
        return self.manifest

    def __enter__(self):
        self.start_pipeline()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.end_pipeline()
        return False


def _parse_time(value: Optional[str]) -> Optional[datetime]:
    return datetime.fromisoformat(value) if value else None


class ManifestRepository:
    """Writes ``manifest.json`` into a run's output directory and reads it back."""

    def __init__(self, output_dir: Optional[Path] = None):
        self.output_dir = Path(output_dir) if output_dir is not None else Path.cwd()
        logging.debug(f"[ManifestRepository] Using output directory: {self.output_dir}")

    @property
    def path(self) -> Path:
        return self.output_dir / MANIFEST_FILE

    def save(self, manifest: RunManifest) -> str:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        with open(self.path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(manifest.to_dict(), f, indent=2, sort_keys=True, default=str)
            f.write("\n")
        logging.info(f"[ManifestRepository] Manifest written to {self.path}")
        return manifest.run_id

    def load(self) -> Optional[RunManifest]:
        if not self.path.exists():
            return None
        with open(self.path, "r", encoding="utf-8") as f:
            data = json.load(f)

        manifest = RunManifest(
            pipeline_name=data["pipeline_name"],
            start_time=datetime.fromisoformat(data["start_time"]),
            end_time=datetime.fromisoformat(data["end_time"]),
            config_echo=data.get("config_echo", {}),
            seed=data.get("seed"),
            tool_version=data.get("tool_version", __version__),
            error=data.get("error"),
        )
        manifest.run_id = data["run_id"]
        manifest.outputs = list(data.get("outputs", []))
        manifest.results = data.get("results", {})
        manifest.result_code = data.get("result_code", 0)
        for step in data.get("steps", []):
            manifest.add_step(
                StepTiming(
                    name=step["name"],
                    duration=step.get("duration"),
                    start_time=_parse_time(step.get("start_time")),
                    end_time=_parse_time(step.get("end_time")),
                    parameters=step.get("parameters", {}),
                    result_code=step.get("result_code", 0),
                    error=step.get("error"),
                )
            )
        return manifest
