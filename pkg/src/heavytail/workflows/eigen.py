from pathlib import Path

from heavytail.config import ExperimentConfig
from heavytail.pipeline.pipeline_commands import (DataPipeline, ReplicateSpectraCommand,
                                                  SaveFileCommand)

EIGEN_FILE = "eigen.csv"


def get_pipeline(config: ExperimentConfig, out_dir: Path) -> DataPipeline:
    return DataPipeline(
        [
            ReplicateSpectraCommand(config),
            SaveFileCommand(output_path=Path(out_dir) / EIGEN_FILE),
        ],
        name="eigen",
    )
