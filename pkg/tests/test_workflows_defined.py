import pytest

from heavytail import pipeline_runner
from heavytail.config import build_config
from heavytail.pipeline.pipeline_commands import (DataPipeline, EmitJsonCommand, LoadCsvCommand,
                                                  SimulatePathsCommand)
from heavytail.workflows import hill

MINIMAL_OVERRIDES = {
    "simulate": {"process.kind": "iid", "process.tail.alpha": 1.0},
    "eigen": {"process.kind": "iid", "process.tail.alpha": 1.0},
    "verify": {"process.kind": "iid", "process.tail.alpha": 1.0},
    "b-estimate": {"process.kind": "iid", "process.tail.alpha": 1.0},
    "garch-alpha": {"a1": 0.5, "b1": 0.5},
    "hill": {"input": "paths.csv"},
}


def test_every_subcommand_has_a_workflow_and_a_config_model():
    assert set(pipeline_runner.WORKFLOW_REGISTRY) == set(pipeline_runner.CONFIG_MODELS) == set(MINIMAL_OVERRIDES)


@pytest.mark.parametrize("name", sorted(MINIMAL_OVERRIDES))
def test_workflow_registry_is_valid(name, temp_dir):
    """Each getter builds a DataPipeline named after its subcommand."""
    getter = pipeline_runner.WORKFLOW_REGISTRY[name]
    assert callable(getter)
    config = build_config(pipeline_runner.CONFIG_MODELS[name], None, MINIMAL_OVERRIDES[name])
    pipeline = getter(config, temp_dir)
    assert isinstance(pipeline, DataPipeline)
    assert pipeline.collector.pipeline_name == name
    assert callable(getattr(pipeline, "run"))


def test_hill_workflow_source_depends_on_config():
    from_file = hill.get_pipeline(build_config(pipeline_runner.CONFIG_MODELS["hill"], None, {"input": "x.csv"}))
    simulated = hill.get_pipeline(build_config(pipeline_runner.CONFIG_MODELS["hill"], None,
                                               {"process.kind": "iid", "process.tail.alpha": 1.0}))
    assert isinstance(from_file.commands[0], LoadCsvCommand)
    assert isinstance(simulated.commands[0], SimulatePathsCommand)
    assert isinstance(simulated.commands[-1], EmitJsonCommand)
