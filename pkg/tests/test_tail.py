"""Tests for the two-sided Pareto law, normalizing sequences and the Hill estimator."""
import math

import numpy as np
import pytest

from heavytail.lab.errors import EstimationError, ParameterError
from heavytail.lab.streams import RandomStreams
from heavytail.lab.tail import (ANALYTIC, EMPIRICAL, NormalizingSequence, TailLaw,
                                default_hill_k, empirical_normalizer, hill_estimate,
                                normalizing_sequence, sample_tail, tail_balance)


@pytest.mark.parametrize("kwargs", [
    {"alpha": 0.0}, {"alpha": 2.0}, {"alpha": -1.0},
    {"alpha": 1.0, "q": 1.5}, {"alpha": 1.0, "q": -0.1},
    {"alpha": 1.0, "scale": 0.0},
])
def test_tail_law_rejects_invalid_fields(kwargs):
    with pytest.raises(ParameterError):
        TailLaw(**kwargs)


def test_sample_tail_rejects_zero_count(rng):
    with pytest.raises(ParameterError):
        sample_tail(TailLaw(1.0), 0, rng)


def test_sample_tail_exact_pareto_survival_at_two(rng):
    x = sample_tail(TailLaw(alpha=1.0, q=1.0, scale=1.0), 10**5, rng)
    assert np.all(x >= 1.0)
    assert abs(np.mean(x > 2.0) - 0.5) <= 0.01


def test_sample_tail_balanced_signs(rng):
    x = sample_tail(TailLaw(alpha=0.5, q=0.5), 10**5, rng)
    assert abs(np.mean(x < 0) - 0.5) <= 0.01


def test_sample_tail_survival_function_matches_law(rng):
    law = TailLaw(alpha=1.2, q=0.3, scale=2.0)
    count = 10**5
    x = sample_tail(law, count, rng)
    for level in (3.0, 6.0, 20.0):
        expected = float(law.survival_abs(level))
        se = math.sqrt(expected * (1 - expected) / count)
        assert abs(np.mean(np.abs(x) > level) - expected) <= 4 * se
        positive = law.q * expected
        assert abs(np.mean(x > level) - positive) <= 4 * math.sqrt(positive * (1 - positive) / count)


def test_sample_tail_is_deterministic_for_a_stream():
    a = sample_tail(TailLaw(1.0), 50, RandomStreams(3).stream("row", 0, 0))
    b = sample_tail(TailLaw(1.0), 50, RandomStreams(3).stream("row", 0, 0))
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("alpha, scale, m, expected", [
    (1.0, 1.0, 100, 100.0),
    (0.5, 1.0, 100, 10000.0),
    (1.9, 2.0, 10, 2.0 * 10 ** (1 / 1.9)),
])
def test_normalizing_sequence_analytic_closed_form(alpha, scale, m, expected):
    value = normalizing_sequence(TailLaw(alpha, scale=scale), m)
    assert value == pytest.approx(expected, rel=1e-12)


def test_normalizing_sequence_nineteen_tenths_example():
    assert normalizing_sequence(TailLaw(1.9, scale=2.0), 10) == pytest.approx(6.72, abs=0.01)


def test_normalizing_sequence_is_nondecreasing():
    seq = NormalizingSequence(TailLaw(0.8))
    values = [seq.value(m) for m in range(1, 200)]
    assert all(b >= a for a, b in zip(values, values[1:]))


def test_normalizing_sequence_rejects_zero_m():
    with pytest.raises(ParameterError):
        normalizing_sequence(TailLaw(1.0), 0)


def test_normalizing_sequence_rejects_unknown_mode():
    with pytest.raises(ParameterError):
        NormalizingSequence(TailLaw(1.0), mode="bogus")


def test_empirical_mode_needs_a_stream():
    with pytest.raises(ParameterError):
        normalizing_sequence(TailLaw(1.0), 10, mode=EMPIRICAL)


@pytest.mark.parametrize("alpha, m", [(1.0, 100), (1.5, 100), (0.5, 10)])
def test_empirical_quantile_mode_close_to_analytic(alpha, m, streams):
    law = TailLaw(alpha)
    analytic = normalizing_sequence(law, m, mode=ANALYTIC)
    empirical = normalizing_sequence(law, m, mode=EMPIRICAL, calibration_draws=10**6,
                                     rng=streams.stream("calibration", int(alpha * 10)))
    assert abs(empirical / analytic - 1) <= 0.05


def test_empirical_normalizer_uses_plain_quantile_when_tail_is_populated():
    data = np.arange(1.0, 1001.0)
    assert empirical_normalizer(data, 10, 1.0) == pytest.approx(np.quantile(data, 0.9))


def test_empirical_normalizer_extrapolates_deep_quantiles():
    data = np.arange(1.0, 1001.0)
    # m0 = 10 for 1000 points
    expected = np.quantile(data, 0.9) * 2.0 ** (1 / 0.8)
    assert empirical_normalizer(data, 20, 0.8) == pytest.approx(expected)


def test_empirical_normalizer_rejects_tiny_samples():
    with pytest.raises(ParameterError):
        empirical_normalizer(np.ones(10), 2, 1.0)


def test_default_hill_k():
    assert default_hill_k(10**6) == 3981
    assert default_hill_k(2) == 1


def test_hill_estimate_large_sample_with_wide_k(rng):
    x = sample_tail(TailLaw(alpha=1.5, q=1.0), 10**6, rng)
    assert 1.45 <= hill_estimate(x, k=20000) <= 1.55


@pytest.mark.parametrize("alpha, low, high, reps, needed", [
    (1.0, 0.93, 1.07, 100, 90),
    (0.5, 0.46, 0.54, 50, 45),
])
def test_hill_estimate_band_holds_in_most_seeds(alpha, low, high, reps, needed):
    streams = RandomStreams(11)
    hits = 0
    for rep in range(reps):
        x = sample_tail(TailLaw(alpha), 10**5, streams.stream("hill", rep))
        hits += low <= hill_estimate(x, k=1000) <= high
    assert hits >= needed


def test_hill_estimate_within_ten_percent_in_95_of_100_repetitions():
    streams = RandomStreams(12)
    hits = 0
    for rep in range(100):
        x = sample_tail(TailLaw(1.2), 10**5, streams.stream("hill", rep))
        hits += abs(hill_estimate(x) / 1.2 - 1) <= 0.10
    assert hits >= 95


def test_hill_estimate_constant_data_is_degenerate():
    with pytest.raises(EstimationError):
        hill_estimate(np.full(100, 3.0), k=10)


@pytest.mark.parametrize("k", [0, 100, 150])
def test_hill_estimate_k_out_of_range(k):
    with pytest.raises(ParameterError):
        hill_estimate(np.arange(1.0, 101.0), k=k)


def test_hill_estimate_all_zero_data():
    with pytest.raises(ParameterError):
        hill_estimate(np.zeros(50), k=5)


def test_tail_balance_recovers_q(rng):
    x = sample_tail(TailLaw(alpha=1.0, q=0.3), 10**5, rng)
    assert abs(tail_balance(x, 5000) - 0.3) <= 0.03


def test_tail_balance_all_positive():
    assert tail_balance(np.arange(1.0, 11.0), 3) == 1.0
