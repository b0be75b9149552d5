from pathlib import Path
from typing import Optional

from heavytail.config import HillConfig, SimulateConfig
from heavytail.pipeline.pipeline_commands import (DataPipeline, EmitJsonCommand,
                                                  HillEstimateCommand, LoadCsvCommand,
                                                  SimulatePathsCommand)


def get_pipeline(config: HillConfig, out_dir: Optional[Path] = None) -> DataPipeline:
    """Hill estimate from a CSV column, or from one freshly simulated path."""
    if config.input is not None:
        source = LoadCsvCommand(config.input)
        column = config.column
    else:
        source = SimulatePathsCommand(SimulateConfig(process=config.process, n=config.n, p=1, seed=config.seed))
        column = "value"
    return DataPipeline(
        [
            source,
            HillEstimateCommand(column=column, k=config.k),
            EmitJsonCommand("payload"),
        ],
        name="hill",
    )
