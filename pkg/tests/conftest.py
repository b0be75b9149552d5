"""Shared test fixtures and utilities for all tests.

Module Structure:
- Test Command Classes: SimpleCommand, WarningCommand, FailingCommand
- Random Stream Fixtures: seeded generators and stream factories
- Matrix & Config Fixtures: small observation matrices, experiment configs
- Temporary Directory & Manifest Fixtures
- Assertion Helpers: reusable assertions for CommandResult validation
"""
import sys
import tempfile
from datetime import datetime
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

# Add src directory to Python path so we can import heavytail modules
sys.path.insert(0, str(Path(__file__).resolve().parents[1] / 'src'))

from heavytail.config import ExperimentConfig, build_config
from heavytail.lab.spectra import ObservationMatrix
from heavytail.lab.streams import RandomStreams
from heavytail.pipeline.command_result import CommandResult
from heavytail.pipeline.metadata import ManifestCollector, RunManifest, StepTiming
from heavytail.pipeline.pipeline_commands import PipelineCommand


# ============================================================================
# Test Command Classes (reusable across all tests)
# ============================================================================

class SimpleCommand(PipelineCommand):
    """Minimal command for testing - returns a small frame."""
    def process(self, data, context=None) -> CommandResult:
        if data is None:
            data = pd.DataFrame({"value": [1.0, 2.0, 3.0]})
        return CommandResult(return_code=0, data=data)


class WarningCommand(PipelineCommand):
    """Returns a positive code, the way a failed tolerance check does."""
    def __init__(self, code=3):
        self.code = code

    def process(self, data, context=None) -> CommandResult:
        return CommandResult(return_code=self.code, data=data, error={"message": "tolerance", "type": "ToleranceFailure"})


class FailingCommand(PipelineCommand):
    def __init__(self, code=-1):
        self.code = code

    def process(self, data, context=None) -> CommandResult:
        return CommandResult(return_code=self.code, data=None, error={"message": "boom", "type": "RuntimeError"})


class RecordingCommand(PipelineCommand):
    """Records that it ran and what context it saw."""
    def __init__(self):
        self.calls = []

    def process(self, data, context=None) -> CommandResult:
        self.calls.append(dict(context or {}))
        return CommandResult(return_code=0, data=data, metadata_updates={"recorded": True})


# ============================================================================
# Random Stream Fixtures
# ============================================================================

@pytest.fixture
def streams():
    return RandomStreams(20240101)


@pytest.fixture
def rng(streams):
    """A single seeded generator for one-off draws."""
    return streams.stream("test")


# ============================================================================
# Matrix & Config Fixtures
# ============================================================================

@pytest.fixture
def diagonal_matrix():
    return ObservationMatrix(np.array([[1.0, 0.0], [0.0, 2.0]]))


@pytest.fixture
def rank_one_matrix():
    return ObservationMatrix(np.ones((2, 2)))


@pytest.fixture
def random_fixture_matrix(rng):
    """5 x 7 Gaussian fixture for Gram-duality checks."""
    return ObservationMatrix(rng.standard_normal((5, 7)))


@pytest.fixture
def experiment_config_builder():
    """Factory fixture for ExperimentConfig objects from dotted overrides."""
    def _builder(**overrides):
        base = {
            "process.kind": "iid",
            "process.tail.alpha": 1.0,
            "n": 20,
            "growth.kind": "explicit",
            "growth.p": 20,
            "k": 2,
            "reps": 40,
            "seed": 7,
        }
        base.update({key.replace("__", "."): value for key, value in overrides.items()})
        return build_config(ExperimentConfig, None, base)
    return _builder


# ============================================================================
# Temporary Directory & Manifest Fixtures
# ============================================================================

@pytest.fixture
def temp_dir():
    """Create a temporary directory for test use."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield tmpdir


@pytest.fixture
def manifest_collector():
    return ManifestCollector(pipeline_name="test_pipeline")


@pytest.fixture
def manifest_builder():
    """Factory fixture for RunManifest objects with a few timed steps."""
    def _builder(pipeline_name="test_pipeline", steps_run=2, seed=7):
        now = datetime.now()
        manifest = RunManifest(
            pipeline_name=pipeline_name,
            start_time=now,
            end_time=now,
            config_echo={"seed": seed, "n": 10},
            seed=seed,
        )
        for i in range(steps_run):
            manifest.add_step(StepTiming(name=f"step_{i}", duration=0.5))
        return manifest
    return _builder


# ============================================================================
# Assertion Helpers
# ============================================================================

def assert_command_result_success(result):
    """Assert that a CommandResult indicates success.

    Checks:
        - return_code == 0
        - data is not None
        - error is None
    """
    assert result.return_code == 0, f"Expected return_code=0, got {result.return_code}: {result.error}"
    assert result.data is not None, "Expected data to be not None"
    assert result.error is None, f"Expected error=None, got {result.error}"


def assert_command_result_failure(result, expected_return_code=-1):
    """Assert that a CommandResult indicates failure.

    Args:
        result: CommandResult to check
        expected_return_code: Expected negative return code (default: -1)
    """
    assert result.return_code == expected_return_code, \
        f"Expected return_code={expected_return_code}, got {result.return_code}"
    assert result.error is not None, "Expected error to be not None"
    assert "message" in result.error and "type" in result.error
