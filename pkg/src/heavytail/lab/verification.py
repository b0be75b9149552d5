"""Verification harness: replicate spectra, compare them with the Poisson/Frechet limits."""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, TYPE_CHECKING

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from numpy.typing import ArrayLike
from scipy import stats

from .errors import ConfigError, DomainError, ParameterError
from .limits import LimitLaw, b_empirical, b_sv_analytic, frechet_cdf, frechet_quantile
from .processes import GarchProcess, IidProcess, ProcessSpec, SvProcess, marginal_normalizer, process_tail_index
from .spectra import build_matrix, diagonal_comparison, growth_dimension
from .streams import RandomStreams

if TYPE_CHECKING:
    from heavytail.config import ExperimentConfig

MIN_KS_REPS = 30
KOLMOGOROV_LEVEL = 0.99


@dataclass(frozen=True)
class GrowthCheck:
    ok: bool
    warning: Optional[str] = None


def validate_growth(alpha: float, kind: str, value: float) -> GrowthCheck:
    """Check the growth hypothesis of the regime; violations only warn."""
    if not 0.0 < alpha < 2.0:
        raise ParameterError(f"alpha must lie in (0, 2), got {alpha}")
    if kind == "beta" and 1.0 < alpha < 2.0:
        bound = (2.0 - alpha) / (alpha - 1.0)
        if value >= bound:
            return GrowthCheck(False, f"beta={value:g} violates beta < (2-alpha)/(alpha-1) = {bound:.6g} for alpha={alpha:g}")
    if kind == "kappa" and value < 1.0:
        return GrowthCheck(False, f"kappa={value:g} is below 1; the p >= n regime assumes kappa >= 1")
    return GrowthCheck(True)


def ks_distance(sample: ArrayLike, cdf: Callable[[np.ndarray], ArrayLike]) -> float:
    """Two-sided Kolmogorov-Smirnov distance between the sample ECDF and ``cdf``."""
    values = np.asarray(sample, dtype=float).ravel()
    if values.size == 0:
        raise ParameterError("ks_distance needs a nonempty sample")
    return float(stats.kstest(values, cdf).statistic)


def kolmogorov_band(count: int, level: float = KOLMOGOROV_LEVEL) -> float:
    """Asymptotic critical KS distance for ``count`` draws at confidence ``level``."""
    if count < 1:
        raise ParameterError(f"count must be >= 1, got {count}")
    return float(stats.kstwobign.ppf(level) / math.sqrt(count))


@dataclass(frozen=True)
class RatioSummary:
    median: float
    mean: float
    lower: float
    upper: float
    median_gap: float

    @classmethod
    def from_values(cls, values: ArrayLike) -> "RatioSummary":
        v = np.asarray(values, dtype=float)
        return cls(
            median=float(np.median(v)),
            mean=float(v.mean()),
            lower=float(np.quantile(v, 0.05)),
            upper=float(np.quantile(v, 0.95)),
            median_gap=float(np.median(np.abs(v - 1.0))),
        )


@dataclass
class ReplicationSet:
    """Per-replication spectra and diagonal statistics, rows in rep order."""

    eigenvalues: np.ndarray
    max_row_sum: np.ndarray
    max_entry_sq: np.ndarray
    max_abs_row_sum: np.ndarray
    sandwich_holds: np.ndarray

    @property
    def reps(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def k(self) -> int:
        return self.eigenvalues.shape[1]


def _replicate(spec: ProcessSpec, p: int, n: int, k: int, streams: RandomStreams, rep: int):
    comparison = diagonal_comparison(build_matrix(spec, p, n, streams, rep), k)
    logging.debug(f"[replicate] rep={rep} lambda_1={comparison.eigenvalues[0]:.6g}")
    return comparison


def collect_replications(spec: ProcessSpec, p: int, n: int, k: int, reps: int,
                         streams: RandomStreams, threads: int = 1) -> ReplicationSet:
    if reps < 1:
        raise ParameterError(f"reps must be >= 1, got {reps}")
    if not 1 <= k <= min(p, n):
        raise ParameterError(f"k must satisfy 1 <= k <= min(p, n) = {min(p, n)}, got {k}")
    comparisons = Parallel(n_jobs=threads, prefer="threads")(
        delayed(_replicate)(spec, p, n, k, streams, rep) for rep in range(reps)
    )
    return ReplicationSet(
        eigenvalues=np.stack([c.eigenvalues for c in comparisons]),
        max_row_sum=np.array([c.row_sums[0] for c in comparisons]),
        max_entry_sq=np.array([c.max_entry_sq for c in comparisons]),
        max_abs_row_sum=np.array([c.max_abs_row_sum for c in comparisons]),
        sandwich_holds=np.array([c.sandwich_holds for c in comparisons]),
    )


@dataclass
class ExperimentSetup:
    """Everything derived from a config before any replication runs."""

    spec: ProcessSpec
    alpha: float
    p: int
    n: int
    a_np: float
    warnings: List[str] = field(default_factory=list)

    @property
    def normalizer(self) -> float:
        return self.a_np**2


def prepare_experiment(cfg: "ExperimentConfig", streams: RandomStreams) -> ExperimentSetup:
    spec = cfg.process.to_spec()
    alpha = cfg.alpha
    if alpha is None:
        alpha = process_tail_index(spec, streams.stream("tail-index"), cfg.calibration_draws)
        logging.info(f"[prepare_experiment] tail index of the row process: {alpha:.6g}")
    if not 0.0 < alpha < 2.0:
        raise DomainError(f"tail index {alpha:.6g} is outside (0, 2); the Poisson limit needs alpha < 2", {"alpha": alpha})
    p = growth_dimension(cfg.n, cfg.growth.kind, cfg.growth.value)
    warnings = []
    check = validate_growth(alpha, cfg.growth.kind, cfg.growth.value)
    if not check.ok:
        logging.warning(f"[prepare_experiment] {check.warning}")
        warnings.append(check.warning)
    a_np = marginal_normalizer(spec, cfg.n * p, alpha, streams.stream("calibration"),
                               cfg.calibration_draws, own_marginal=cfg.own_marginal)
    logging.info(f"[prepare_experiment] p={p} n={cfg.n} alpha={alpha:.6g} a_np={a_np:.6g}")
    return ExperimentSetup(spec, float(alpha), p, cfg.n, float(a_np), warnings)


def select_b(cfg: "ExperimentConfig", setup: ExperimentSetup, streams: RandomStreams):
    """(b, stderr, note): 1 for iid, E sigma^alpha for SV, Monte Carlo for GARCH."""
    variant = setup.spec.variant
    if isinstance(variant, IidProcess) or (isinstance(variant, SvProcess) and cfg.own_marginal):
        return 1.0, 0.0, None
    if isinstance(variant, SvProcess):
        estimate = b_sv_analytic(variant.vol, setup.alpha, rng=streams.stream("b-sv"))
        return estimate.value, estimate.stderr, None
    assert isinstance(variant, GarchProcess)
    result = b_empirical(setup.spec, setup.alpha, setup.n, setup.p, setup.a_np, cfg.b_reps,
                         streams, cfg.x_grid, threads=cfg.threads)
    note = f"b_used={result.pooled:.6g} +- {result.pooled_stderr:.3g} is a Monte Carlo estimate (no closed form for GARCH)"
    return result.pooled, result.pooled_stderr, note


@dataclass
class VerificationReport:
    ks_largest: float
    ks_uniform_spacing: Optional[float]
    ecdf_points: List[tuple]
    ratio_max_diag: RatioSummary
    ratio_max_entry: RatioSummary
    ratio_row_norm: RatioSummary
    sandwich_violations: int
    b_used: float
    b_stderr: float
    alpha: float
    normalizer: float
    p: int
    n: int
    k: int
    reps: int
    seed: int
    kolmogorov_band: float
    tolerances: Dict[str, float] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)
    checks: Dict[str, Dict[str, Any]] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks.values())

    def ecdf_frame(self) -> pd.DataFrame:
        law = LimitLaw(self.alpha, self.b_used)
        frame = pd.DataFrame(self.ecdf_points, columns=["x", "empirical"])
        x = np.maximum(frame["x"].to_numpy(), np.finfo(float).tiny)
        frame["theoretical"] = frechet_cdf(law, x)
        return frame

    def qq_frame(self) -> pd.DataFrame:
        """Sorted normalized largest eigenvalues against Frechet quantiles at (i - 0.5)/reps."""
        law = LimitLaw(self.alpha, self.b_used)
        empirical = np.array([x for x, _ in self.ecdf_points], dtype=float)
        positions = (np.arange(1, empirical.size + 1) - 0.5) / empirical.size
        return pd.DataFrame({"empirical": empirical, "theoretical": frechet_quantile(law, positions)})

    def to_dict(self) -> Dict[str, Any]:
        return {
            "ks_largest": self.ks_largest,
            "ks_uniform_spacing": self.ks_uniform_spacing,
            "ecdf_points": [[float(x), float(f)] for x, f in self.ecdf_points],
            "ratio_max_diag": vars(self.ratio_max_diag),
            "ratio_max_entry": vars(self.ratio_max_entry),
            "ratio_row_norm": vars(self.ratio_row_norm),
            "sandwich_violations": self.sandwich_violations,
            "b_used": self.b_used,
            "b_stderr": self.b_stderr,
            "alpha": self.alpha,
            "normalizer": self.normalizer,
            "p": self.p,
            "n": self.n,
            "k": self.k,
            "reps": self.reps,
            "seed": self.seed,
            "kolmogorov_band": self.kolmogorov_band,
            "tolerances": dict(self.tolerances),
            "warnings": list(self.warnings),
            "checks": self.checks,
            "passed": self.passed,
        }


def _ecdf_points(values: np.ndarray) -> List[tuple]:
    ordered = np.sort(values)
    heights = np.arange(1, ordered.size + 1) / ordered.size
    return [(float(x), float(f)) for x, f in zip(ordered, heights)]


def summarize(replications: ReplicationSet, setup: ExperimentSetup, b_used: float) -> Dict[str, Any]:
    """KS statistics, ECDF and ratio summaries for a set of replications."""
    law = LimitLaw(setup.alpha, b_used)
    tiny = np.finfo(float).tiny
    largest = replications.eigenvalues[:, 0] / setup.normalizer
    ks_largest = ks_distance(largest, lambda x: frechet_cdf(law, np.maximum(x, tiny)))
    ks_spacing = None
    if replications.k >= 2:
        ratio = np.divide(replications.eigenvalues[:, 1], replications.eigenvalues[:, 0],
                          out=np.zeros(replications.reps), where=replications.eigenvalues[:, 0] > 0)
        ks_spacing = ks_distance(ratio ** (setup.alpha / 2.0), stats.uniform.cdf)
    top = replications.eigenvalues[:, 0]
    return {
        "ks_largest": ks_largest,
        "ks_uniform_spacing": ks_spacing,
        "ecdf_points": _ecdf_points(largest),
        "ratio_max_diag": RatioSummary.from_values(top / replications.max_row_sum),
        "ratio_max_entry": RatioSummary.from_values(top / replications.max_entry_sq),
        "ratio_row_norm": RatioSummary.from_values(top / replications.max_abs_row_sum**2),
        "sandwich_violations": int((~replications.sandwich_holds).sum()),
    }


def run_experiment(cfg: "ExperimentConfig") -> VerificationReport:
    """Replicate the normalized top-k spectrum and score it against the limit law.

    Deterministic given ``cfg.seed``: each replication draws only from its own
    (seed, rep, row) streams and results are reduced in rep order.
    """
    if cfg.reps < MIN_KS_REPS:
        raise ConfigError(f"reps={cfg.reps} is below the KS minimum of {MIN_KS_REPS}", {"reps": cfg.reps})
    streams = RandomStreams(cfg.seed)
    setup = prepare_experiment(cfg, streams)
    b_used, b_stderr, note = select_b(cfg, setup, streams)
    warnings = list(setup.warnings)
    if note:
        warnings.append(note)
    if b_used <= 0:
        raise DomainError("b_used is zero: the normalized eigenvalues have a degenerate limit", {"b_used": b_used})
    k = min(cfg.k, setup.p, setup.n)
    if k < cfg.k:
        warnings.append(f"k={cfg.k} exceeds min(p, n)={k}; truncated")
    logging.info(f"[run_experiment] {cfg.reps} replications of a {setup.p}x{setup.n} matrix, k={k}, b_used={b_used:.6g}")
    replications = collect_replications(setup.spec, setup.p, setup.n, k, cfg.reps, streams, cfg.threads)
    summary = summarize(replications, setup, b_used)
    tolerances = cfg.tolerances.model_dump()
    logging.info(f"[run_experiment] ks_largest={summary['ks_largest']:.4f} ks_uniform_spacing={summary['ks_uniform_spacing']}")
    return VerificationReport(
        b_used=float(b_used),
        b_stderr=float(b_stderr),
        alpha=setup.alpha,
        normalizer=setup.normalizer,
        p=setup.p,
        n=setup.n,
        k=k,
        reps=cfg.reps,
        seed=cfg.seed,
        kolmogorov_band=kolmogorov_band(cfg.reps),
        tolerances=tolerances,
        warnings=warnings,
        **summary,
    )
