"""Stationary heavy-tailed row processes: iid, stochastic volatility and GARCH(p,q)."""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike

from .errors import EstimationError, ParameterError, UnsupportedError
from .tail import (DEFAULT_CALIBRATION_DRAWS, TailLaw, empirical_normalizer,
                   hill_estimate, sample_tail)

DEFAULT_GARCH_BURN_IN = 1000


@dataclass(frozen=True)
class MDependentVol:
    """sigma_t = (1/(m+1)) * sum_{j=0..m} eta_{t-j}, eta iid lognormal(mu, tau)."""

    m: int = 1
    mu: float = 0.0
    tau: float = 0.5

    def __post_init__(self):
        if self.m < 0:
            raise ParameterError(f"m must be >= 0, got {self.m}")
        if not self.tau > 0:
            raise ParameterError(f"tau must be positive, got {self.tau}")

    def simulate(self, n: int, rng: np.random.Generator) -> np.ndarray:
        eta = rng.lognormal(self.mu, self.tau, size=n + self.m)
        window = np.full(self.m + 1, 1.0 / (self.m + 1))
        return np.convolve(eta, window, mode="valid")


@dataclass(frozen=True)
class ExpGaussianLinearVol:
    """log sigma_t = sum_k psi_k xi_{t-k}, xi iid N(0, xi_std^2), finite psi window.

    ``xi_std = 0`` is accepted as the degenerate constant volatility sigma = 1.
    """

    psi: Tuple[float, ...] = (1.0,)
    xi_std: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "psi", tuple(float(v) for v in self.psi))
        if not self.psi or not any(v != 0.0 for v in self.psi):
            raise ParameterError("psi needs at least one nonzero coefficient")
        if self.xi_std < 0:
            raise ParameterError(f"xi_std must be nonnegative, got {self.xi_std}")

    @property
    def tau_eff(self) -> float:
        """Standard deviation of log sigma_t."""
        return self.xi_std * math.sqrt(sum(v * v for v in self.psi))

    def simulate(self, n: int, rng: np.random.Generator) -> np.ndarray:
        xi = rng.normal(0.0, 1.0, size=n + len(self.psi) - 1) * self.xi_std
        return np.exp(np.convolve(xi, np.asarray(self.psi), mode="valid"))


VolSpec = Union[MDependentVol, ExpGaussianLinearVol]


@dataclass(frozen=True)
class GarchSpec:
    """sigma_t^2 = a0 + sum a_i X_{t-i}^2 + sum b_j sigma_{t-j}^2, X_t = sigma_t Z_t, Z ~ N(0,1)."""

    a0: float
    a: Tuple[float, ...] = ()
    b: Tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        object.__setattr__(self, "b", tuple(float(v) for v in self.b))
        if not self.a0 > 0:
            raise ParameterError(f"a0 must be positive, got {self.a0}")
        if not self.a and not self.b:
            raise ParameterError("GARCH needs p >= 1 or q >= 1")
        if any(v < 0 for v in self.a + self.b):
            raise ParameterError("GARCH coefficients must be nonnegative")
        if self.a and self.a[-1] <= 0:
            raise ParameterError("trailing ARCH coefficient a_p must be positive")
        if self.b and self.b[-1] <= 0:
            raise ParameterError("trailing GARCH coefficient b_q must be positive")

    @property
    def persistence(self) -> float:
        return sum(self.a) + sum(self.b)

    @property
    def initial_variance(self) -> float:
        """Unconditional variance when finite and positive, a0 otherwise."""
        if self.persistence < 1.0:
            return self.a0 / (1.0 - self.persistence)
        return self.a0

    @property
    def order(self) -> Tuple[int, int]:
        return len(self.a), len(self.b)


@dataclass(frozen=True)
class IidProcess:
    law: TailLaw
    kind: str = field(default="iid", init=False)


@dataclass(frozen=True)
class SvProcess:
    law: TailLaw
    vol: VolSpec
    kind: str = field(default="sv", init=False)


@dataclass(frozen=True)
class GarchProcess:
    garch: GarchSpec
    kind: str = field(default="garch", init=False)


@dataclass(frozen=True)
class ProcessSpec:
    """A stationary row process and the number of initial values to discard."""

    variant: Union[IidProcess, SvProcess, GarchProcess]
    burn_in: int = 0

    def __post_init__(self):
        if self.burn_in < 0:
            raise ParameterError(f"burn_in must be >= 0, got {self.burn_in}")
        if isinstance(self.variant, GarchProcess) and self.burn_in < 1:
            raise ParameterError("GARCH processes need burn_in >= 1")

    @property
    def kind(self) -> str:
        return self.variant.kind

    @classmethod
    def iid(cls, law: TailLaw) -> "ProcessSpec":
        return cls(IidProcess(law))

    @classmethod
    def sv(cls, law: TailLaw, vol: VolSpec, burn_in: int = 0) -> "ProcessSpec":
        return cls(SvProcess(law, vol), burn_in)

    @classmethod
    def garch(cls, garch: GarchSpec, burn_in: int = DEFAULT_GARCH_BURN_IN) -> "ProcessSpec":
        return cls(GarchProcess(garch), burn_in)


def _garch_batch(garch: GarchSpec, z: np.ndarray, burn_in: int) -> np.ndarray:
    """Run the GARCH recursion on noise ``z`` of shape (rows, burn_in + n), vectorised over rows."""
    rows, total = z.shape
    p, q = garch.order
    lags = max(p, q, 1)
    init = garch.initial_variance
    x2_hist = np.full((rows, lags), init)
    s2_hist = np.full((rows, lags), init)
    a = np.asarray(garch.a)
    b = np.asarray(garch.b)
    out = np.empty((rows, total - burn_in))
    for t in range(total):
        sigma2 = np.full(rows, garch.a0)
        if p:
            sigma2 += x2_hist[:, :p] @ a
        if q:
            sigma2 += s2_hist[:, :q] @ b
        x = np.sqrt(sigma2) * z[:, t]
        # most recent lag sits in column 0
        x2_hist = np.roll(x2_hist, 1, axis=1)
        s2_hist = np.roll(s2_hist, 1, axis=1)
        x2_hist[:, 0] = x * x
        s2_hist[:, 0] = sigma2
        if t >= burn_in:
            out[:, t - burn_in] = x
    return out


def simulate_paths(spec: ProcessSpec, n: int, rngs: Sequence[np.random.Generator]) -> np.ndarray:
    """One path of length n per generator; row i depends only on ``rngs[i]``."""
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    total = spec.burn_in + n
    variant = spec.variant
    if isinstance(variant, IidProcess):
        paths = np.stack([sample_tail(variant.law, total, rng) for rng in rngs])
    elif isinstance(variant, SvProcess):
        # sigma and Z come from the same row stream but never share draws
        paths = np.stack([variant.vol.simulate(total, rng) * sample_tail(variant.law, total, rng) for rng in rngs])
    else:
        z = np.stack([rng.standard_normal(total) for rng in rngs])
        return _garch_batch(variant.garch, z, spec.burn_in)
    return paths[:, spec.burn_in:]


def simulate_path(spec: ProcessSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    return simulate_paths(spec, n, [rng])[0]


@dataclass(frozen=True)
class MarginEstimate:
    """Monte Carlo estimate of E log(a1 Z^2 + b1) with its standard error."""

    value: float
    stderr: float

    @property
    def is_stationary(self) -> bool:
        return self.value + 3.0 * self.stderr < 0.0


def stationarity_margin(a1: float, b1: float, samples: int, rng: np.random.Generator) -> MarginEstimate:
    if a1 < 0 or b1 < 0:
        raise ParameterError("a1 and b1 must be nonnegative")
    if a1 == 0 and b1 == 0:
        raise ParameterError("a1 and b1 cannot both be zero")
    if a1 == 0:
        return MarginEstimate(math.log(b1), 0.0)
    if samples < 2:
        raise ParameterError(f"samples must be >= 2, got {samples}")
    z = rng.standard_normal(samples)
    values = np.log(a1 * z * z + b1)
    return MarginEstimate(float(values.mean()), float(values.std(ddof=1) / math.sqrt(samples)))


def garch_stationarity_margin(spec: GarchSpec, samples: int, rng: np.random.Generator) -> MarginEstimate:
    p, q = spec.order
    if p > 1 or q > 1:
        raise UnsupportedError(f"stationarity margin needs GARCH(1,1), got GARCH({p},{q})")
    a1 = spec.a[0] if p else 0.0
    b1 = spec.b[0] if q else 0.0
    return stationarity_margin(a1, b1, samples, rng)


BLOCKS_LOG = "log"
BLOCKS_RATIO = "ratio"


def extremal_index_blocks(data: ArrayLike, block_len: int, threshold_quantile: float,
                          method: str = BLOCKS_LOG) -> float:
    """Blocks estimator of the extremal index of |data|, clipped to (0, 1].

    ``ratio``: blocks whose max exceeds u over all exceedances of u. ``log`` (default):
    log(1 - K/blocks) / (block_len * log(1 - N/len)), the same count corrected for
    several independent exceedances landing in one block.
    """
    values = np.abs(np.asarray(data, dtype=float).ravel())
    if block_len < 2:
        raise ParameterError(f"block_len must be >= 2, got {block_len}")
    if not 0.0 < threshold_quantile < 1.0:
        raise ParameterError(f"threshold_quantile must lie in (0, 1), got {threshold_quantile}")
    if values.size < 10 * block_len:
        raise ParameterError(f"need at least {10 * block_len} values, got {values.size}")
    if method not in (BLOCKS_LOG, BLOCKS_RATIO):
        raise ParameterError(f"unknown blocks method '{method}'")
    u = float(np.quantile(values, threshold_quantile))
    blocks = values[: (values.size // block_len) * block_len].reshape(-1, block_len)
    exceed = blocks > u
    total = int(exceed.sum())
    if total == 0:
        raise EstimationError(f"no exceedances of threshold {u}; lower threshold_quantile",
                              {"threshold": u, "threshold_quantile": threshold_quantile})
    clusters = int(exceed.any(axis=1).sum())
    if method == BLOCKS_RATIO:
        return min(1.0, clusters / total)
    if clusters == blocks.shape[0]:
        return 1.0
    theta = math.log1p(-clusters / blocks.shape[0]) / (block_len * math.log1p(-total / exceed.size))
    return min(1.0, theta)


CALIBRATION_ROWS = 100


def calibration_path(spec: ProcessSpec, draws: int, rng: np.random.Generator) -> np.ndarray:
    """About ``draws`` marginal values from CALIBRATION_ROWS independent stationary paths."""
    rows = min(CALIBRATION_ROWS, max(1, draws // 100))
    length = max(1, -(-draws // rows))
    return simulate_paths(spec, length, rng.spawn(rows)).ravel()


def process_tail_index(spec: ProcessSpec, rng: Optional[np.random.Generator] = None,
                       calibration_draws: int = DEFAULT_CALIBRATION_DRAWS) -> float:
    """Tail index of the marginal law of the process."""
    variant = spec.variant
    if isinstance(variant, (IidProcess, SvProcess)):
        return variant.law.alpha
    from .garch_tail import MomentFunction, solve_tail_index

    p, q = variant.garch.order
    if p == 1 and q <= 1:
        b1 = variant.garch.b[0] if q else 0.0
        return solve_tail_index(MomentFunction(variant.garch.a[0], b1))
    if rng is None:
        raise ParameterError("Hill calibration of a GARCH(p,q) tail index needs a random stream")
    path = calibration_path(spec, calibration_draws, rng)
    alpha = hill_estimate(path)
    logging.info(f"[process_tail_index] Hill estimate for GARCH{variant.garch.order}: {alpha:.4f}")
    return alpha


def marginal_normalizer(spec: ProcessSpec, m: int, alpha: float, rng: Optional[np.random.Generator] = None,
                        calibration_draws: int = DEFAULT_CALIBRATION_DRAWS, own_marginal: bool = False) -> float:
    """a_m for the matrix entries.

    iid: analytic. SV: analytic from Z's law (b then carries E sigma^alpha) unless
    ``own_marginal``, in which case the quantile of X itself is used. GARCH: empirical
    quantile of a stationary calibration path.
    """
    variant = spec.variant
    if isinstance(variant, IidProcess) or (isinstance(variant, SvProcess) and not own_marginal):
        return variant.law.scale * m ** (1.0 / variant.law.alpha)
    if rng is None:
        raise ParameterError("empirical normalizer needs a random stream")
    path = calibration_path(spec, calibration_draws, rng)
    return empirical_normalizer(path, m, alpha)
