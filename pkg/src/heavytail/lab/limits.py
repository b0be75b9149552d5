"""Limit laws of the normalized top eigenvalues and the cluster constant b."""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from numpy.typing import ArrayLike

from .errors import DegenerateLimitError, DomainError, EstimationError, ParameterError
from .processes import ExpGaussianLinearVol, MDependentVol, ProcessSpec, VolSpec, simulate_paths
from .streams import RandomStreams

DEFAULT_X_GRID = (0.5, 1.0, 2.0, 4.0)
MIN_EXPECTED_EXCEEDANCES = 50
PILOT_TAG = "b-pilot"
MAIN_TAG = "b-rows"
CHUNK = 1000


@dataclass(frozen=True)
class LimitLaw:
    """Points b^(2/alpha) Gamma_i^(-2/alpha); b = 0 is the degenerate limit at 0."""

    alpha: float
    b: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ParameterError(f"alpha must lie in (0, 2), got {self.alpha}")
        if self.b < 0:
            raise ParameterError(f"b must be nonnegative, got {self.b}")

    @property
    def is_degenerate(self) -> bool:
        return self.b == 0


def gamma_points(k: int, rng: np.random.Generator) -> np.ndarray:
    """Arrival times Gamma_1 < ... < Gamma_k of a unit-rate Poisson process."""
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    return np.cumsum(rng.exponential(1.0, size=k))


def _to_limit_points(law: LimitLaw, gammas: np.ndarray) -> np.ndarray:
    if law.is_degenerate:
        raise DegenerateLimitError("b = 0: normalized eigenvalues converge to zero in probability")
    return law.b ** (2.0 / law.alpha) * gammas ** (-2.0 / law.alpha)


def limit_topk_sample(law: LimitLaw, k: int, rng: np.random.Generator) -> np.ndarray:
    if law.is_degenerate:
        raise DegenerateLimitError("b = 0: normalized eigenvalues converge to zero in probability")
    return _to_limit_points(law, gamma_points(k, rng))


def limit_topk_batch(law: LimitLaw, k: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` independent draws of the top-k limit vector, shape (size, k)."""
    if k < 1 or size < 1:
        raise ParameterError("k and size must be >= 1")
    if law.is_degenerate:
        raise DegenerateLimitError("b = 0: normalized eigenvalues converge to zero in probability")
    return _to_limit_points(law, np.cumsum(rng.exponential(1.0, size=(size, k)), axis=1))


def frechet_cdf(law: LimitLaw, x: ArrayLike) -> np.ndarray:
    """exp(-b x^(-alpha/2)) = P(b^(2/alpha) Gamma_1^(-2/alpha) <= x)."""
    values = np.asarray(x, dtype=float)
    if np.any(values <= 0):
        raise DomainError("frechet_cdf is defined for x > 0 only")
    result = np.exp(-law.b * values ** (-law.alpha / 2.0))
    return result if result.ndim else float(result)


def frechet_quantile(law: LimitLaw, u: ArrayLike) -> np.ndarray:
    """Inverse of frechet_cdf on (0, 1)."""
    if law.is_degenerate:
        raise DegenerateLimitError("b = 0: normalized eigenvalues converge to zero in probability")
    probs = np.asarray(u, dtype=float)
    if np.any((probs <= 0) | (probs >= 1)):
        raise DomainError("frechet_quantile is defined for 0 < u < 1 only")
    result = (law.b / -np.log(probs)) ** (2.0 / law.alpha)
    return result if result.ndim else float(result)


@dataclass(frozen=True)
class BEstimate:
    value: float
    stderr: float = 0.0


def b_sv_analytic(vol: VolSpec, alpha: float, samples: int = 10**6,
                  rng: Optional[np.random.Generator] = None) -> BEstimate:
    """b = E sigma_0^alpha for the supported volatility constructions."""
    if not alpha > 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    if isinstance(vol, ExpGaussianLinearVol):
        return BEstimate(math.exp(0.5 * alpha * alpha * vol.tau_eff**2))
    if isinstance(vol, MDependentVol):
        if samples < 2:
            raise ParameterError(f"samples must be >= 2, got {samples}")
        rng = rng if rng is not None else RandomStreams(0).stream("b-sv")
        eta = rng.lognormal(vol.mu, vol.tau, size=(samples, vol.m + 1))
        powered = eta.mean(axis=1) ** alpha
        return BEstimate(float(powered.mean()), float(powered.std(ddof=1) / math.sqrt(samples)))
    raise ParameterError(f"unsupported volatility spec {type(vol).__name__}")


@dataclass(frozen=True)
class BPoint:
    x: float
    b_hat: float
    stderr: float
    exceedances: int


@dataclass
class BEmpiricalResult:
    points: List[BPoint]
    pooled: float
    pooled_stderr: float
    normalizer: float
    reps: int
    pilot_counts: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "points": [vars(pt) for pt in self.points],
            "pooled": self.pooled,
            "pooled_stderr": self.pooled_stderr,
            "normalizer": self.normalizer,
            "reps": self.reps,
        }


def _row_sums_of_squares(spec: ProcessSpec, n: int, streams: RandomStreams, tag: str, start: int, stop: int) -> np.ndarray:
    rngs = [streams.stream(tag, row) for row in range(start, stop)]
    paths = simulate_paths(spec, n, rngs)
    return (paths * paths).sum(axis=1)


def _simulate_row_sums(spec: ProcessSpec, n: int, reps: int, streams: RandomStreams, tag: str, threads: int) -> np.ndarray:
    bounds = [(s, min(s + CHUNK, reps)) for s in range(0, reps, CHUNK)]
    parts = Parallel(n_jobs=threads, prefer="threads")(
        delayed(_row_sums_of_squares)(spec, n, streams, tag, s, e) for s, e in bounds
    )
    return np.concatenate(parts)


def b_empirical(
    spec: ProcessSpec,
    alpha: float,
    n: int,
    p: int,
    normalizer: float,
    reps: int,
    streams: RandomStreams,
    x_grid: Sequence[float] = DEFAULT_X_GRID,
    pilot_reps: Optional[int] = None,
    threads: int = 1,
) -> BEmpiricalResult:
    """Estimate b from x^(alpha/2) p P(sum_t X_t^2 > a_np^2 x) on a grid of x.

    ``normalizer`` is a_np (not squared). Grid points share the simulated rows.
    """
    if not 0 < alpha < 2:
        raise ParameterError(f"alpha must lie in (0, 2), got {alpha}")
    if n < 1 or p < 1 or reps < 2:
        raise ParameterError("n, p must be >= 1 and reps >= 2")
    grid = np.asarray(sorted(float(x) for x in x_grid))
    if grid.size == 0 or np.any(grid <= 0):
        raise ParameterError("x_grid must contain positive values")
    level = normalizer**2 * grid

    pilot_reps = pilot_reps or min(reps, max(500, reps // 10))
    pilot = _simulate_row_sums(spec, n, pilot_reps, streams, PILOT_TAG, threads)
    pilot_hits = (pilot[:, None] > level[None, :]).sum(axis=0)
    expected = pilot_hits / pilot_reps * reps
    pilot_counts = {f"{x:g}": int(c) for x, c in zip(grid, pilot_hits)}
    if np.any(expected < MIN_EXPECTED_EXCEEDANCES):
        raise EstimationError(
            f"fewer than {MIN_EXPECTED_EXCEEDANCES} expected exceedances at some grid point; raise reps or lower x",
            {"pilot_reps": pilot_reps, "pilot_counts": pilot_counts, "reps": reps},
        )

    sums = _simulate_row_sums(spec, n, reps, streams, MAIN_TAG, threads)
    counts = (sums[:, None] > level[None, :]).sum(axis=0)
    fraction = counts / reps
    scale = grid ** (alpha / 2.0) * p
    b_hat = scale * fraction
    stderr = scale * np.sqrt(fraction * (1.0 - fraction) / reps)
    points = [BPoint(float(x), float(b), float(s), int(c)) for x, b, s, c in zip(grid, b_hat, stderr, counts)]

    if np.all(stderr > 0):
        weights = 1.0 / stderr**2
    else:
        # a grid point with fraction 0 or 1 has no usable variance
        weights = np.ones_like(stderr)
    pooled = float(np.sum(weights * b_hat) / np.sum(weights))
    # rows are shared across grid points; weighted mean of the errors bounds the pooled error
    pooled_stderr = float(np.sum(weights * stderr) / np.sum(weights))
    logging.info(f"[b_empirical] pooled b={pooled:.4f} +- {pooled_stderr:.4f} from {reps} rows")
    return BEmpiricalResult(points, pooled, pooled_stderr, normalizer, reps, pilot_counts)
