from pathlib import Path

from heavytail.config import SimulateConfig
from heavytail.pipeline.pipeline_commands import (DataPipeline, SaveFileCommand,
                                                  SimulatePathsCommand)

PATHS_FILE = "paths.csv"


def get_pipeline(config: SimulateConfig, out_dir: Path) -> DataPipeline:
    """Simulate p independent rows and write them as paths.csv."""
    return DataPipeline(
        [
            SimulatePathsCommand(config),
            SaveFileCommand(output_path=Path(out_dir) / PATHS_FILE),
        ],
        name="simulate",
    )
