"""Tests for DataPipeline control flow and manifest bookkeeping."""
import json
from pathlib import Path

import pandas as pd

from conftest import FailingCommand, RecordingCommand, SimpleCommand, WarningCommand
from heavytail.pipeline.command_result import CommandResult
from heavytail.pipeline.metadata import ManifestCollector, ManifestRepository
from heavytail.pipeline.pipeline_commands import DataPipeline, PipelineCommand, SaveFileCommand


class ContextWriterCommand(PipelineCommand):
    def process(self, data, context=None) -> CommandResult:
        return CommandResult(return_code=0, data=data, context_updates={"payload": {"alpha_star": 1.0}})


def test_pipeline_passes_data_between_steps():
    recorder = RecordingCommand()
    result = DataPipeline([SimpleCommand(), recorder]).run()
    assert isinstance(result, pd.DataFrame)
    assert list(result["value"]) == [1.0, 2.0, 3.0]
    assert len(recorder.calls) == 1


def test_pipeline_halts_on_negative_code_and_saves_manifest(temp_dir):
    recorder = RecordingCommand()
    collector = ManifestCollector("halting")
    repo = ManifestRepository(Path(temp_dir))
    pipeline = DataPipeline([SimpleCommand(), FailingCommand(-2), recorder], collector=collector)

    assert pipeline.run(repository=repo) is None
    assert recorder.calls == []
    assert pipeline.result_code == -2
    saved = json.loads(repo.path.read_text())
    assert saved["result_code"] == -2
    assert saved["error"]["message"] == "boom"
    assert [s["name"] for s in saved["steps"]] == ["SimpleCommand", "FailingCommand"]


def test_pipeline_continues_after_warning_and_keeps_the_code():
    recorder = RecordingCommand()
    pipeline = DataPipeline([SimpleCommand(), WarningCommand(3), recorder])
    result = pipeline.run()
    assert result is not None
    assert len(recorder.calls) == 1
    assert pipeline.result_code == 3
    assert pipeline.collector.get_manifest().error["type"] == "ToleranceFailure"


def test_pipeline_keeps_the_worst_warning():
    pipeline = DataPipeline([WarningCommand(1), WarningCommand(3), WarningCommand(2)])
    pipeline.run()
    assert pipeline.result_code == 3


def test_context_updates_reach_later_steps():
    recorder = RecordingCommand()
    pipeline = DataPipeline([ContextWriterCommand(), recorder], context={"seed": 7})
    pipeline.run()
    assert recorder.calls[0] == {"seed": 7, "payload": {"alpha_star": 1.0}}


def test_outputs_and_results_are_split_in_the_manifest(temp_dir):
    target = Path(temp_dir) / "out.csv"
    pipeline = DataPipeline([SimpleCommand(), SaveFileCommand(target), RecordingCommand()])
    pipeline.run()
    manifest = pipeline.collector.get_manifest()
    assert manifest.outputs == [str(target.resolve())]
    assert manifest.results == {"recorded": True}
    assert manifest.result_code == 0
    assert set(manifest.timing) == {"SimpleCommand", "SaveFileCommand", "RecordingCommand"}


def test_pipeline_creates_a_collector_when_none_given():
    pipeline = DataPipeline([SimpleCommand()], name="simulate")
    pipeline.run()
    assert pipeline.collector.get_manifest().pipeline_name == "simulate"
