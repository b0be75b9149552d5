from pathlib import Path
from typing import Optional

from heavytail.config import GarchAlphaConfig
from heavytail.pipeline.pipeline_commands import (DataPipeline, EmitJsonCommand,
                                                  GarchAlphaCommand)


def get_pipeline(config: GarchAlphaConfig, out_dir: Optional[Path] = None) -> DataPipeline:
    return DataPipeline([GarchAlphaCommand(config), EmitJsonCommand("payload")], name="garch-alpha")
