import json
import logging
import sys
import time
from abc import ABC, abstractmethod
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Optional, TextIO

import numpy as np
import pandas as pd

from heavytail.config import (ExperimentConfig, GarchAlphaConfig, SimulateConfig)
from heavytail.lab.errors import ConfigError, HeavyTailError, ParameterError, UnsupportedError
from heavytail.lab.garch_tail import MomentFunction, log_moment, moment_h, solve_tail_index
from heavytail.lab.limits import b_empirical
from heavytail.lab.processes import GarchProcess, garch_stationarity_margin
from heavytail.lab.spectra import build_matrix
from heavytail.lab.streams import RandomStreams
from heavytail.lab.tail import default_hill_k, hill_estimate, tail_balance
from heavytail.lab.verification import (collect_replications, prepare_experiment,
                                        run_experiment, select_b)

from .checks import CheckSuite
from .command_result import CONFIG_ERROR, OK, RUNTIME_ERROR, TOLERANCE_FAILURE, CommandResult

# Decorator-based command registry
COMMAND_REGISTRY = {}


def register_command(cls):
    COMMAND_REGISTRY[cls.__name__] = cls
    return cls


def failure(command: str, e: Exception) -> CommandResult:
    """Map an exception to a halting CommandResult: -2 for config/parameter errors, -1 otherwise."""
    code = CONFIG_ERROR if isinstance(e, (ParameterError, ConfigError)) else RUNTIME_ERROR
    error = e.to_dict() if isinstance(e, HeavyTailError) else {"message": str(e), "type": type(e).__name__}
    logging.error(f"[{command}] {error['type']}: {error['message']}")
    return CommandResult(return_code=code, data=None, error=error)


def json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    return str(value)


class PipelineCommand(ABC):
    @abstractmethod
    def process(self, data: Optional[Any], context: Optional[Dict[str, Any]] = None) -> CommandResult:
        pass


@register_command
class SimulatePathsCommand(PipelineCommand):
    """p independent paths of length n as a long (row, t, value) frame."""

    def __init__(self, config: SimulateConfig, stderr: Optional[TextIO] = None):
        self.config = config
        self.stderr = stderr

    def process(self, data=None, context: Optional[Dict[str, Any]] = None) -> CommandResult:
        cfg = self.config
        try:
            spec = cfg.process.to_spec()
            streams = RandomStreams(cfg.seed)
            logging.info(f"[SimulatePathsCommand] Simulating {cfg.p} {spec.kind} paths of length {cfg.n}")
            matrix = build_matrix(spec, cfg.p, cfg.n, streams)
            frame = pd.DataFrame(
                {
                    "row": np.repeat(np.arange(cfg.p), cfg.n),
                    "t": np.tile(np.arange(cfg.n), cfg.p),
                    "value": matrix.entries.ravel(),
                }
            )
            metadata = {"p": cfg.p, "n": cfg.n, "process": spec.kind}
            if isinstance(spec.variant, GarchProcess):
                metadata.update(self._report_margin(spec.variant, streams))
            return CommandResult(return_code=OK, data=frame, metadata_updates=metadata)
        except Exception as e:
            return failure("SimulatePathsCommand", e)

    def _report_margin(self, variant: GarchProcess, streams: RandomStreams) -> Dict[str, Any]:
        try:
            margin = garch_stationarity_margin(variant.garch, self.config.margin_samples, streams.stream("margin"))
        except UnsupportedError as e:
            logging.info(f"[SimulatePathsCommand] {e.message}")
            return {}
        stream = self.stderr or sys.stderr
        print(
            f"stationarity_margin={margin.value:.6f} stderr={margin.stderr:.2e} stationary={margin.is_stationary}",
            file=stream,
        )
        if not margin.is_stationary:
            logging.warning(f"[SimulatePathsCommand] margin {margin.value:.4g} is not 3 SE below 0")
        return {"stationarity_margin": margin.value, "stationarity_margin_stderr": margin.stderr}


@register_command
class ReplicateSpectraCommand(PipelineCommand):
    """Top-k eigenvalues of ``reps`` independent matrices, one CSV line per (rep, rank)."""

    def __init__(self, config: ExperimentConfig):
        self.config = config

    def process(self, data=None, context: Optional[Dict[str, Any]] = None) -> CommandResult:
        cfg = self.config
        try:
            streams = RandomStreams(cfg.seed)
            setup = prepare_experiment(cfg, streams)
            k = min(cfg.k, setup.p, setup.n)
            reps = collect_replications(setup.spec, setup.p, setup.n, k, cfg.reps, streams, cfg.threads)
            eigenvalues = reps.eigenvalues.ravel()
            frame = pd.DataFrame(
                {
                    "rep": np.repeat(np.arange(reps.reps), k),
                    "rank": np.tile(np.arange(1, k + 1), reps.reps),
                    "lambda": eigenvalues,
                    "lambda_normalized": eigenvalues / setup.normalizer,
                    "max_entry_sq": np.repeat(reps.max_entry_sq, k),
                    "max_rowsum": np.repeat(reps.max_row_sum, k),
                }
            )
            logging.info(f"[ReplicateSpectraCommand] {reps.reps} replications, p={setup.p}, n={setup.n}, k={k}")
            return CommandResult(
                return_code=OK,
                data=frame,
                metadata_updates={
                    "normalizer": setup.normalizer,
                    "a_np": setup.a_np,
                    "alpha": setup.alpha,
                    "p": setup.p,
                    "n": setup.n,
                    "k": k,
                    "warnings": setup.warnings,
                },
            )
        except Exception as e:
            return failure("ReplicateSpectraCommand", e)


@register_command
class VerifyExperimentCommand(PipelineCommand):
    """Runs the experiment and its checks; return code 3 when a tolerance fails."""

    def __init__(self, config: ExperimentConfig, suite: Optional[CheckSuite] = None):
        self.config = config
        self.suite = suite or CheckSuite()

    def process(self, data=None, context: Optional[Dict[str, Any]] = None) -> CommandResult:
        try:
            report = run_experiment(self.config)
            passed = self.suite.evaluate(report)
        except Exception as e:
            return failure("VerifyExperimentCommand", e)
        failed = sorted(name for name, outcome in report.checks.items() if not outcome["passed"])
        logging.info(f"[VerifyExperimentCommand] passed={passed} ks_largest={report.ks_largest:.4f}")
        return CommandResult(
            return_code=OK if passed else TOLERANCE_FAILURE,
            data=report.ecdf_frame(),
            error=None if passed else {"message": f"tolerance checks failed: {', '.join(failed)}", "type": "ToleranceFailure"},
            context_updates={"report": report, "qq": report.qq_frame()},
            metadata_updates={
                "ks_largest": report.ks_largest,
                "ks_uniform_spacing": report.ks_uniform_spacing,
                "b_used": report.b_used,
                "normalizer": report.normalizer,
                "passed": passed,
                "warnings": report.warnings,
            },
        )


@register_command
class GarchAlphaCommand(PipelineCommand):
    """GARCH(1,1) tail index alpha* with h(alpha*), the stationarity margin and node count."""

    def __init__(self, config: GarchAlphaConfig):
        self.config = config

    def process(self, data=None, context: Optional[Dict[str, Any]] = None) -> CommandResult:
        cfg = self.config
        try:
            f = MomentFunction(cfg.a1, cfg.b1, cfg.nodes)
            margin = log_moment(f)
            alpha = solve_tail_index(f, cfg.tol, cfg.alpha_max)
            payload = {
                "a1": cfg.a1,
                "b1": cfg.b1,
                "alpha_star": alpha,
                "h": moment_h(f, alpha),
                "margin": margin,
                "nodes": cfg.nodes,
            }
        except Exception as e:
            return failure("GarchAlphaCommand", e)
        logging.info(f"[GarchAlphaCommand] alpha*={payload['alpha_star']:.10f}")
        return CommandResult(return_code=OK, data=pd.DataFrame([payload]), context_updates={"payload": payload},
                             metadata_updates=payload)


@register_command
class BEstimateCommand(PipelineCommand):
    """Monte Carlo cluster constant on the x grid, plus the pooled value."""

    def __init__(self, config: ExperimentConfig):
        self.config = config

    def process(self, data=None, context: Optional[Dict[str, Any]] = None) -> CommandResult:
        cfg = self.config
        try:
            streams = RandomStreams(cfg.seed)
            setup = prepare_experiment(cfg, streams)
            result = b_empirical(setup.spec, setup.alpha, setup.n, setup.p, setup.a_np, cfg.b_reps,
                                 streams, cfg.x_grid, threads=cfg.threads)
            payload = {
                "pooled": result.pooled,
                "pooled_stderr": result.pooled_stderr,
                "alpha": setup.alpha,
                "a_np": setup.a_np,
                "p": setup.p,
                "n": setup.n,
                "reps": result.reps,
            }
            if not isinstance(setup.spec.variant, GarchProcess):
                payload["b_reference"] = select_b(cfg, setup, streams)[0]
        except Exception as e:
            return failure("BEstimateCommand", e)
        frame = pd.DataFrame([vars(pt) for pt in result.points], columns=["x", "b_hat", "stderr", "exceedances"])
        return CommandResult(return_code=OK, data=frame, context_updates={"payload": payload}, metadata_updates=payload)


@register_command
class LoadCsvCommand(PipelineCommand):
    def __init__(self, input_path):
        self.input_path = Path(input_path)

    def process(self, data=None, context: Optional[Dict[str, Any]] = None) -> CommandResult:
        logging.info(f"[LoadCsvCommand] Reading {self.input_path}")
        try:
            frame = pd.read_csv(self.input_path)
        except Exception as e:
            return failure("LoadCsvCommand", e)
        return CommandResult(return_code=OK, data=frame, metadata_updates={"input_file_path": str(self.input_path)})


@register_command
class HillEstimateCommand(PipelineCommand):
    def __init__(self, column: str = "value", k: Optional[int] = None):
        self.column = column
        self.k = k

    def process(self, data: Optional[pd.DataFrame], context: Optional[Dict[str, Any]] = None) -> CommandResult:
        if data is None or self.column not in data.columns:
            return failure("HillEstimateCommand", ConfigError(f"input has no '{self.column}' column"))
        try:
            values = data[self.column].to_numpy(dtype=float)
            k = self.k or default_hill_k(values.size)
            payload = {
                "alpha_hat": hill_estimate(values, k),
                "k": k,
                "count": int(values.size),
                "tail_balance": tail_balance(values, k),
            }
        except Exception as e:
            return failure("HillEstimateCommand", e)
        logging.info(f"[HillEstimateCommand] alpha_hat={payload['alpha_hat']:.4f} from k={k} of {values.size}")
        return CommandResult(return_code=OK, data=data, context_updates={"payload": payload}, metadata_updates=payload)


@register_command
class SaveFileCommand(PipelineCommand):
    """Writes the pipeline frame, or a frame held under ``context_key``, as CSV; data passes through."""

    def __init__(self, output_path, save_empty: bool = True, context_key: Optional[str] = None):
        self.output_path = Path(output_path)
        self.save_empty = save_empty
        self.context_key = context_key

    def process(self, data: Optional[pd.DataFrame], context: Optional[Dict[str, Any]] = None) -> CommandResult:
        frame = data if self.context_key is None else (context or {}).get(self.context_key)
        try:
            logging.info(f"[SaveFileCommand] Saving DataFrame to {self.output_path}")
            if frame is None or (frame.empty and not self.save_empty):
                return CommandResult(return_code=OK, data=data)

            self.output_path.parent.mkdir(parents=True, exist_ok=True)
            frame.to_csv(self.output_path, index=False, encoding="utf-8", lineterminator="\n")
            logging.info(f"[SaveFileCommand] Saved to {self.output_path} ({len(frame)}) rows")
            return CommandResult(
                return_code=OK,
                data=data,
                metadata_updates={"output_file_path": str(self.output_path.resolve())},
            )
        except Exception as e:
            return failure("SaveFileCommand", e)


@register_command
class SaveReportCommand(PipelineCommand):
    """Writes a context object (anything with ``to_dict``) as sorted, indented JSON."""

    def __init__(self, output_path, context_key: str = "report"):
        self.output_path = Path(output_path)
        self.context_key = context_key

    def process(self, data=None, context: Optional[Dict[str, Any]] = None) -> CommandResult:
        obj = (context or {}).get(self.context_key)
        if obj is None:
            return failure("SaveReportCommand", ConfigError(f"nothing under context key '{self.context_key}'"))
        try:
            payload = obj.to_dict() if hasattr(obj, "to_dict") else obj
            self.output_path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.output_path, "w", encoding="utf-8", newline="\n") as f:
                json.dump(payload, f, indent=2, sort_keys=True, default=json_default)
                f.write("\n")
        except Exception as e:
            return failure("SaveReportCommand", e)
        logging.info(f"[SaveReportCommand] Report written to {self.output_path}")
        return CommandResult(return_code=OK, data=data, metadata_updates={"output_file_path": str(self.output_path.resolve())})


@register_command
class EmitJsonCommand(PipelineCommand):
    """Prints a context payload to stdout as one JSON object."""

    def __init__(self, context_key: str = "payload", stream: Optional[TextIO] = None):
        self.context_key = context_key
        self.stream = stream

    def process(self, data=None, context: Optional[Dict[str, Any]] = None) -> CommandResult:
        payload = (context or {}).get(self.context_key)
        if payload is None:
            return failure("EmitJsonCommand", ConfigError(f"nothing under context key '{self.context_key}'"))
        print(json.dumps(payload, sort_keys=True, default=json_default), file=self.stream or sys.stdout)
        return CommandResult(return_code=OK, data=data)


class DataPipeline:
    def __init__(self, commands, collector=None, context=None, name="DataPipeline"):
        self.commands = commands
        if collector is None:
            from heavytail.pipeline.metadata import ManifestCollector

            collector = ManifestCollector(pipeline_name=name)
        self.collector = collector
        self.context = context or {}

    @property
    def result_code(self) -> int:
        manifest = self.collector.get_manifest()
        return manifest.result_code if manifest and manifest.result_code is not None else OK

    def run(self, initial_data=None, repository=None):
        data = initial_data

        self.collector.start_pipeline()
        manifest = self.collector.get_manifest()

        for command in self.commands:
            logging.info(f"[DataPipeline] Running step: {command.__class__.__name__}")
            step_start_time = datetime.now(timezone.utc)
            start = time.time()

            result = command.process(data, context=self.context)

            elapsed = time.time() - start
            step_end_time = datetime.now(timezone.utc)

            from heavytail.pipeline.metadata import StepTiming

            self.collector.track_step(
                StepTiming(
                    name=command.__class__.__name__,
                    duration=elapsed,
                    start_time=step_start_time,
                    end_time=step_end_time,
                    parameters=result.metadata_updates or {},
                    result_code=result.return_code,
                    error=result.error,
                )
            )

            if result.metadata_updates:
                for key, value in result.metadata_updates.items():
                    if key == "output_file_path":
                        manifest.add_output(value)
                    else:
                        manifest.results[key] = value

            if result.context_updates:
                self.context.update(result.context_updates)

            # Halt on negative return codes and persist the manifest
            if result.return_code < 0:
                logging.error(
                    f"[DataPipeline] Command {command.__class__.__name__} failed with return_code={result.return_code}: {result.error}"
                )
                manifest.result_code = result.return_code
                manifest.error = result.error
                self.collector.end_pipeline()
                if repository:
                    repository.save(manifest)
                return None

            # Positive codes are warnings: keep going, remember the worst one
            if result.return_code > 0:
                logging.warning(f"[DataPipeline] Command {command.__class__.__name__} returned {result.return_code}")
                manifest.result_code = max(manifest.result_code or 0, result.return_code)
                manifest.error = result.error

            data = result.data

        self.collector.end_pipeline()
        if manifest.result_code is None:
            manifest.result_code = OK

        if repository:
            repository.save(manifest)

        return data
