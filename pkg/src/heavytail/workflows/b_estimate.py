from pathlib import Path

from heavytail.config import ExperimentConfig
from heavytail.pipeline.pipeline_commands import (BEstimateCommand, DataPipeline,
                                                  EmitJsonCommand, SaveFileCommand)

B_ESTIMATE_FILE = "b_estimate.csv"


def get_pipeline(config: ExperimentConfig, out_dir: Path) -> DataPipeline:
    return DataPipeline(
        [
            BEstimateCommand(config),
            SaveFileCommand(output_path=Path(out_dir) / B_ESTIMATE_FILE),
            EmitJsonCommand("payload"),
        ],
        name="b-estimate",
    )
