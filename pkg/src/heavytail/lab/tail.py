"""Regularly varying marginal laws: sampling, normalizing sequences, tail index.

The generator family is the two-sided Pareto law

    P(X > x) = q (x / scale)^(-alpha),  P(X < -x) = (1 - q) (x / scale)^(-alpha),  x >= scale,

so that the normalizing sequence a_m, defined by m P(|X| > a_m) = 1, is available in
closed form: a_m = scale * m^(1/alpha).
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.typing import ArrayLike

from .errors import EstimationError, ParameterError

ANALYTIC = "analytic"
EMPIRICAL = "empirical-quantile"
DEFAULT_CALIBRATION_DRAWS = 10**6
# Minimum number of calibration points beyond an empirical quantile.
MIN_TAIL_POINTS = 100


@dataclass(frozen=True)
class TailLaw:
    """Two-sided Pareto law with tail index alpha, tail balance q and scale."""

    alpha: float
    q: float = 0.5
    scale: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ParameterError(f"alpha must lie in (0, 2), got {self.alpha}")
        if not 0.0 <= self.q <= 1.0:
            raise ParameterError(f"tail balance q must lie in [0, 1], got {self.q}")
        if not self.scale > 0.0:
            raise ParameterError(f"scale must be positive, got {self.scale}")

    def survival_abs(self, x: ArrayLike) -> np.ndarray:
        """P(|X| > x)."""
        x = np.asarray(x, dtype=float)
        return np.where(x < self.scale, 1.0, (np.maximum(x, self.scale) / self.scale) ** (-self.alpha))


def sample_tail(law: TailLaw, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``count`` iid values; sign and magnitude are drawn independently."""
    if count < 1:
        raise ParameterError(f"count must be >= 1, got {count}")
    magnitude = law.scale * (1.0 + rng.pareto(law.alpha, size=count))
    positive = rng.random(size=count) < law.q
    return np.where(positive, magnitude, -magnitude)


def empirical_normalizer(abs_sample: ArrayLike, m: int, alpha: float) -> float:
    """(1 - 1/m)-quantile of |X| from a calibration sample.

    When fewer than MIN_TAIL_POINTS sample points lie beyond the requested quantile,
    the quantile is taken at m0 = len / MIN_TAIL_POINTS and scaled by (m/m0)^(1/alpha).
    """
    if m < 1:
        raise ParameterError(f"m must be >= 1, got {m}")
    data = np.abs(np.asarray(abs_sample, dtype=float))
    if data.size < MIN_TAIL_POINTS:
        raise ParameterError(f"calibration sample too small: {data.size} < {MIN_TAIL_POINTS}")
    m0 = data.size // MIN_TAIL_POINTS
    if m <= m0:
        return float(np.quantile(data, 1.0 - 1.0 / m, method="linear"))
    base = float(np.quantile(data, 1.0 - 1.0 / m0, method="linear"))
    logging.debug(f"[empirical_normalizer] extrapolating a_m from m0={m0} to m={m}")
    return base * (m / m0) ** (1.0 / alpha)


@dataclass(frozen=True)
class NormalizingSequence:
    """a_m solving m P(|X| > a_m) = 1, analytic or from an empirical quantile."""

    law: TailLaw
    mode: str = ANALYTIC
    calibration_draws: int = DEFAULT_CALIBRATION_DRAWS

    def __post_init__(self):
        if self.mode not in (ANALYTIC, EMPIRICAL):
            raise ParameterError(f"unknown normalizing mode '{self.mode}'")
        if self.calibration_draws < MIN_TAIL_POINTS:
            raise ParameterError(f"calibration_draws must be >= {MIN_TAIL_POINTS}")

    def value(self, m: int, rng: Optional[np.random.Generator] = None) -> float:
        if m < 1:
            raise ParameterError(f"m must be >= 1, got {m}")
        if self.mode == ANALYTIC:
            return self.law.scale * m ** (1.0 / self.law.alpha)
        if rng is None:
            raise ParameterError("empirical-quantile mode needs a random stream")
        sample = sample_tail(self.law, self.calibration_draws, rng)
        return empirical_normalizer(sample, m, self.law.alpha)


def normalizing_sequence(
    law: TailLaw,
    m: int,
    mode: str = ANALYTIC,
    calibration_draws: int = DEFAULT_CALIBRATION_DRAWS,
    rng: Optional[np.random.Generator] = None,
) -> float:
    return NormalizingSequence(law, mode, calibration_draws).value(m, rng)


def default_hill_k(count: int) -> int:
    return max(1, min(count - 1, int(math.floor(count**0.6))))


def hill_estimate(data: ArrayLike, k: Optional[int] = None) -> float:
    """Hill estimator of alpha from the k upper order statistics of |data|."""
    values = np.abs(np.asarray(data, dtype=float).ravel())
    if k is None:
        k = default_hill_k(values.size)
    if not 1 <= k < values.size:
        raise ParameterError(f"k must satisfy 1 <= k < {values.size}, got {k}")
    if not np.any(values > 0):
        raise ParameterError("data are all zero")
    top = -np.partition(-values, k)[: k + 1]
    top.sort()
    threshold = top[0]
    if threshold <= 0:
        raise EstimationError(f"order statistic {k + 1} is zero; lower k", {"k": k})
    mean_log = float(np.mean(np.log(top[1:] / threshold)))
    if mean_log <= 0.0:
        raise EstimationError("degenerate order statistics: zero log spacing", {"k": k})
    return 1.0 / mean_log


def tail_balance(data: ArrayLike, k: Optional[int] = None) -> float:
    """Fraction of positive values among the k largest |data|."""
    values = np.asarray(data, dtype=float).ravel()
    if k is None:
        k = default_hill_k(values.size)
    if not 1 <= k <= values.size:
        raise ParameterError(f"k must satisfy 1 <= k <= {values.size}, got {k}")
    order = np.argsort(-np.abs(values), kind="stable")[:k]
    return float(np.mean(values[order] > 0))
