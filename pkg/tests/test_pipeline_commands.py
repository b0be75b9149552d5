"""Tests for the individual pipeline commands."""
import io
import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from conftest import assert_command_result_failure, assert_command_result_success
from heavytail.config import GarchAlphaConfig, SimulateConfig, build_config
from heavytail.lab.errors import DomainError, ParameterError
from heavytail.lab.streams import RandomStreams
from heavytail.lab.tail import TailLaw, sample_tail
from heavytail.pipeline.command_result import CONFIG_ERROR, RUNTIME_ERROR, TOLERANCE_FAILURE
from heavytail.pipeline.pipeline_commands import (COMMAND_REGISTRY, BEstimateCommand, EmitJsonCommand,
                                                  GarchAlphaCommand, HillEstimateCommand, LoadCsvCommand,
                                                  ReplicateSpectraCommand, SaveFileCommand, SaveReportCommand,
                                                  SimulatePathsCommand, VerifyExperimentCommand, failure,
                                                  json_default)


def simulate_config(**overrides):
    base = {"process.kind": "iid", "process.tail.alpha": 1.0, "n": 10, "p": 2, "seed": 7}
    base.update({key.replace("__", "."): value for key, value in overrides.items()})
    return build_config(SimulateConfig, None, base)


def test_registry_holds_every_command():
    assert {"SimulatePathsCommand", "ReplicateSpectraCommand", "VerifyExperimentCommand", "GarchAlphaCommand",
            "BEstimateCommand", "LoadCsvCommand", "HillEstimateCommand", "SaveFileCommand",
            "SaveReportCommand", "EmitJsonCommand"} <= set(COMMAND_REGISTRY)


def test_failure_maps_parameter_errors_to_config_code():
    assert failure("X", ParameterError("bad k")).return_code == CONFIG_ERROR
    result = failure("X", DomainError("outside", {"alpha": 2.5}))
    assert_command_result_failure(result, RUNTIME_ERROR)
    assert result.error["details"] == {"alpha": 2.5}
    assert failure("X", OSError("disk")).error["type"] == "OSError"


def test_json_default_handles_numpy():
    assert json.dumps({"a": np.float64(1.5), "b": np.arange(2)}, default=json_default) == '{"a": 1.5, "b": [0, 1]}'


# --- simulate ---

def test_simulate_paths_long_frame():
    result = SimulatePathsCommand(simulate_config()).process(None)
    assert_command_result_success(result)
    frame = result.data
    assert list(frame.columns) == ["row", "t", "value"]
    assert len(frame) == 20
    assert list(frame["row"].unique()) == [0, 1]
    assert list(frame.loc[frame["row"] == 1, "t"]) == list(range(10))
    assert np.all(np.abs(frame["value"]) >= 1.0)


def test_simulate_garch_reports_margin_on_stderr():
    cfg = simulate_config(process__kind="garch", process__garch__a1=0.1, process__garch__b1=0.8,
                          process__burn_in=50, margin_samples=10**4)
    stream = io.StringIO()
    result = SimulatePathsCommand(cfg, stderr=stream).process(None)
    assert_command_result_success(result)
    assert stream.getvalue().startswith("stationarity_margin=")
    assert "stationary=True" in stream.getvalue()
    assert result.metadata_updates["stationarity_margin"] < 0


def test_simulate_higher_order_garch_skips_margin():
    cfg = simulate_config(process__kind="garch", process__garch__a=[0.1, 0.05], process__garch__b=[0.7],
                          process__burn_in=50)
    stream = io.StringIO()
    result = SimulatePathsCommand(cfg, stderr=stream).process(None)
    assert_command_result_success(result)
    assert stream.getvalue() == ""
    assert "stationarity_margin" not in result.metadata_updates


# --- spectra and verification ---

def test_replicate_spectra_frame(experiment_config_builder):
    cfg = experiment_config_builder(k=2, reps=3, n=10, growth__p=6)
    result = ReplicateSpectraCommand(cfg).process(None)
    assert_command_result_success(result)
    frame = result.data
    assert len(frame) == 6
    assert list(frame.columns) == ["rep", "rank", "lambda", "lambda_normalized", "max_entry_sq", "max_rowsum"]
    normalizer = result.metadata_updates["normalizer"]
    np.testing.assert_allclose(frame["lambda_normalized"], frame["lambda"] / normalizer)
    for _, group in frame.groupby("rep"):
        assert group["lambda"].is_monotonic_decreasing
        assert (group["lambda"].iloc[0] >= group["max_rowsum"].iloc[0] * (1 - 1e-9))


def test_verify_reports_tolerance_failure(experiment_config_builder):
    cfg = experiment_config_builder(reps=30, tolerances__ks=1e-6)
    result = VerifyExperimentCommand(cfg).process(None)
    assert result.return_code == TOLERANCE_FAILURE
    assert result.error["type"] == "ToleranceFailure"
    assert "ks_largest" in result.error["message"]
    report = result.context_updates["report"]
    assert not report.passed
    assert list(result.data.columns) == ["x", "empirical", "theoretical"]


def test_verify_too_few_reps_is_a_config_error(experiment_config_builder):
    result = VerifyExperimentCommand(experiment_config_builder(reps=10)).process(None)
    assert_command_result_failure(result, CONFIG_ERROR)


# --- garch alpha and b ---

def test_garch_alpha_payload():
    result = GarchAlphaCommand(GarchAlphaConfig(a1=0.5, b1=0.5)).process(None)
    assert_command_result_success(result)
    payload = result.context_updates["payload"]
    assert payload["alpha_star"] == pytest.approx(1.0, abs=1e-8)
    assert payload["h"] == pytest.approx(1.0, abs=1e-8)
    assert payload["margin"] < 0
    assert payload["nodes"] == 256


def test_garch_alpha_nonstationary_is_runtime_error():
    result = GarchAlphaCommand(GarchAlphaConfig(a1=3.0, b1=0.5)).process(None)
    assert_command_result_failure(result, RUNTIME_ERROR)
    assert result.error["type"] == "DomainError"


def test_b_estimate_iid(experiment_config_builder):
    cfg = experiment_config_builder(n=5, growth__p=10, b_reps=2000)
    result = BEstimateCommand(cfg).process(None)
    assert_command_result_success(result)
    assert list(result.data.columns) == ["x", "b_hat", "stderr", "exceedances"]
    payload = result.context_updates["payload"]
    assert payload["b_reference"] == 1.0
    assert payload["a_np"] == pytest.approx(50.0)
    assert payload["pooled"] > 0


# --- files and hill ---

def test_load_csv_missing_file(temp_dir):
    result = LoadCsvCommand(Path(temp_dir) / "missing.csv").process(None)
    assert_command_result_failure(result, RUNTIME_ERROR)


def test_hill_estimate_from_frame():
    values = sample_tail(TailLaw(1.0), 10**5, RandomStreams(3).stream("hill"))
    result = HillEstimateCommand(k=2000).process(pd.DataFrame({"value": values}))
    assert_command_result_success(result)
    payload = result.context_updates["payload"]
    assert 0.9 <= payload["alpha_hat"] <= 1.1
    assert payload["k"] == 2000
    assert payload["count"] == 10**5


def test_hill_estimate_missing_column():
    result = HillEstimateCommand(column="returns").process(pd.DataFrame({"value": [1.0, 2.0]}))
    assert_command_result_failure(result, CONFIG_ERROR)


def test_save_file_round_trip(temp_dir):
    frame = pd.DataFrame({"x": [0.5, 1.0], "b_hat": [1.1, 0.9]})
    target = Path(temp_dir) / "sub" / "b_estimate.csv"
    result = SaveFileCommand(target).process(frame)
    assert_command_result_success(result)
    assert target.read_text(encoding="utf-8").splitlines()[0] == "x,b_hat"
    loaded = LoadCsvCommand(target).process(None).data
    pd.testing.assert_frame_equal(loaded, frame)


def test_save_file_from_context_passes_data_through(temp_dir):
    data = pd.DataFrame({"x": [1.0]})
    qq = pd.DataFrame({"empirical": [0.4, 2.0], "theoretical": [0.5, 1.9]})
    target = Path(temp_dir) / "qq.csv"
    result = SaveFileCommand(target, context_key="qq").process(data, {"qq": qq})
    assert_command_result_success(result)
    assert result.data is data
    pd.testing.assert_frame_equal(pd.read_csv(target), qq)


def test_save_file_skips_empty_frames_on_request(temp_dir):
    target = Path(temp_dir) / "empty.csv"
    SaveFileCommand(target, save_empty=False).process(pd.DataFrame())
    assert not target.exists()


def test_save_report_writes_sorted_json(temp_dir):
    target = Path(temp_dir) / "report.json"
    result = SaveReportCommand(target, context_key="payload").process(None, {"payload": {"b": np.float64(2.0), "a": 1}})
    assert result.return_code == 0
    assert json.loads(target.read_text()) == {"a": 1, "b": 2.0}
    assert result.metadata_updates["output_file_path"] == str(target.resolve())


def test_save_report_without_context_fails(temp_dir):
    result = SaveReportCommand(Path(temp_dir) / "report.json").process(None, {})
    assert_command_result_failure(result, CONFIG_ERROR)


def test_emit_json_prints_one_line():
    stream = io.StringIO()
    EmitJsonCommand(stream=stream).process(None, {"payload": {"alpha_star": 1.0, "a1": 0.5}})
    assert stream.getvalue() == '{"a1": 0.5, "alpha_star": 1.0}\n'
