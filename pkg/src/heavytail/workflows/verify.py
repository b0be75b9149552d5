from pathlib import Path
from typing import Optional

from heavytail.config import ExperimentConfig
from heavytail.pipeline.checks import CheckSuite
from heavytail.pipeline.pipeline_commands import (DataPipeline, SaveFileCommand,
                                                  SaveReportCommand,
                                                  VerifyExperimentCommand)

ECDF_FILE = "ecdf.csv"
QQ_FILE = "qq.csv"
REPORT_FILE = "report.json"


def get_pipeline(config: ExperimentConfig, out_dir: Path, suite: Optional[CheckSuite] = None) -> DataPipeline:
    """Run the experiment, then write ecdf.csv, qq.csv and report.json even when a tolerance fails."""
    return DataPipeline(
        [
            VerifyExperimentCommand(config, suite),
            SaveFileCommand(output_path=Path(out_dir) / ECDF_FILE),
            SaveFileCommand(output_path=Path(out_dir) / QQ_FILE, context_key="qq"),
            SaveReportCommand(output_path=Path(out_dir) / REPORT_FILE, context_key="report"),
        ],
        name="verify",
    )
