"""Tail index of GARCH(1,1): the positive root of h(alpha) = E[(a1 Z^2 + b1)^alpha] = 1."""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import gammaln, roots_hermite

from .errors import DomainError, NoRootError, ParameterError, PrecisionError

DEFAULT_NODES = 256
MIN_NODES = 32
DEFAULT_TOL = 1e-8
DEFAULT_ALPHA_MAX = 50.0
TARGET_REL_ERR = 1e-8
MAX_REL_DISAGREEMENT = 1e-6
# below this sqrt(b1/a1) the integrand bends faster than the Hermite node spacing near 0
MIN_KINK_SCALE = 0.5
QUAD_LIMIT = 500
QUAD_EPSREL = 1e-11
LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@lru_cache(maxsize=16)
def _standard_normal_rule(nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights with E f(Z) ~= sum w_i f(z_i) for Z ~ N(0, 1)."""
    x, w = roots_hermite(nodes)
    return math.sqrt(2.0) * x, w / math.sqrt(math.pi)


@dataclass(frozen=True)
class MomentFunction:
    a1: float
    b1: float = 0.0
    quadrature_nodes: int = DEFAULT_NODES

    def __post_init__(self):
        if not self.a1 > 0:
            raise ParameterError(f"a1 must be positive, got {self.a1}")
        if self.b1 < 0:
            raise ParameterError(f"b1 must be nonnegative, got {self.b1}")
        if self.quadrature_nodes < MIN_NODES:
            raise ParameterError(f"quadrature_nodes must be >= {MIN_NODES}, got {self.quadrature_nodes}")

    def _quadrature(self, alpha: float, nodes: int) -> float:
        z, w = _standard_normal_rule(nodes)
        with np.errstate(over="ignore", under="ignore"):
            return float(np.dot(w, (self.a1 * z * z + self.b1) ** alpha))

    @property
    def kink_scale(self) -> float:
        return math.sqrt(self.b1 / self.a1)

    def _breakpoints(self, alpha: float) -> list:
        # the weighted integrand peaks where z^2 = 2 alpha - b1/a1
        peak = math.sqrt(max(2.0 * alpha - self.b1 / self.a1, 0.0))
        return sorted({0.0, self.kink_scale, peak})

    def _half_line(self, integrand, edges) -> Tuple[float, float]:
        """2 * integral over z >= 0 of an even ``integrand``, split at ``edges``."""
        total, err = 0.0, 0.0
        bounds = list(edges) + [np.inf]
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            if hi <= lo:
                continue
            value, abserr = quad(integrand, lo, hi, epsabs=0.0, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT)
            total += value
            err += abserr
        return 2.0 * total, 2.0 * err

    def _adaptive(self, alpha: float) -> Tuple[float, float]:
        def integrand(z: float) -> float:
            return math.exp(alpha * math.log(self.a1 * z * z + self.b1) - 0.5 * z * z - LOG_SQRT_2PI)

        return self._half_line(integrand, self._breakpoints(alpha))

    def closed_form(self, alpha: float) -> float:
        """b1 = 0 only: a1^alpha 2^alpha Gamma(alpha + 1/2) / sqrt(pi)."""
        log_h = alpha * math.log(2.0 * self.a1) + gammaln(alpha + 0.5) - 0.5 * math.log(math.pi)
        return math.exp(log_h)


def moment_h(f: MomentFunction, alpha: float) -> float:
    """E[(a1 Z^2 + b1)^alpha]: Gauss-Hermite with a doubled-node check, adaptive near a sharp bend at 0."""
    if alpha < 0:
        raise ParameterError(f"alpha must be nonnegative, got {alpha}")
    if alpha == 0:
        return 1.0
    if f.b1 == 0:
        # |z|^(2 alpha) is not smooth at 0
        return f.closed_form(alpha)
    if f.kink_scale < MIN_KINK_SCALE:
        return _adaptive_moment(f, alpha)
    coarse = f._quadrature(alpha, f.quadrature_nodes)
    fine = f._quadrature(alpha, 2 * f.quadrature_nodes)
    rel = abs(fine - coarse) / abs(fine)
    if rel > MAX_REL_DISAGREEMENT:
        logging.debug(f"[moment_h] Hermite gap {rel:.2e} at alpha={alpha}; switching to adaptive quadrature")
        return _adaptive_moment(f, alpha)
    if rel > TARGET_REL_ERR:
        logging.debug(f"[moment_h] relative gap {rel:.2e} above target at alpha={alpha}")
    return fine


def _adaptive_moment(f: MomentFunction, alpha: float) -> float:
    value, err = f._adaptive(alpha)
    if err > MAX_REL_DISAGREEMENT * value:
        raise PrecisionError(
            f"adaptive quadrature error {err / value:.3e} at alpha={alpha}",
            {"alpha": alpha, "relative_error": err / value},
        )
    return value


def log_moment(f: MomentFunction) -> float:
    """E log(a1 Z^2 + b1), the GARCH(1,1) stationarity margin.

    The log has a near-singularity at z = 0 of width sqrt(b1/a1), so the integral is
    taken adaptively with a breakpoint there.
    """
    closed = math.log(f.a1) - np.euler_gamma - math.log(2.0)
    if f.b1 == 0:
        return closed

    # E log(a1 Z^2) is exact; only E log1p(b1 / (a1 Z^2)) is integrated
    def correction(z: float) -> float:
        if z == 0.0:
            return 0.0
        return math.log1p(f.b1 / (f.a1 * z * z)) * math.exp(-0.5 * z * z - LOG_SQRT_2PI)

    value, _ = f._half_line(correction, [0.0, f.kink_scale])
    return float(closed + value)


def solve_tail_index(f: MomentFunction, tol: float = DEFAULT_TOL, alpha_max: float = DEFAULT_ALPHA_MAX) -> float:
    """The unique alpha* > 0 with h(alpha*) = 1."""
    if not tol > 0:
        raise ParameterError(f"tol must be positive, got {tol}")
    margin = log_moment(f)
    if margin >= 0:
        raise DomainError(f"no stationary solution: E log(a1 Z^2 + b1) = {margin:.6g} >= 0", {"margin": margin})

    def excess(alpha: float) -> float:
        return moment_h(f, alpha) - 1.0

    at_one = excess(1.0)
    if abs(at_one) <= tol:
        return 1.0
    if at_one < 0:
        lo, hi = 1.0, 2.0
        while excess(hi) <= 0:
            lo, hi = hi, 2.0 * hi
            if hi > alpha_max:
                raise NoRootError(f"no root below alpha_max={alpha_max}", {"alpha_max": alpha_max})
    else:
        # h dips below 1 right after 0 because h'(0) = margin < 0
        lo, hi = 0.5, 1.0
        while excess(lo) >= 0:
            lo, hi = lo / 2.0, lo
            if lo < 1e-12:
                raise PrecisionError("cannot bracket the root near zero", {"margin": margin})
    root = brentq(excess, lo, hi, xtol=1e-12, rtol=4 * np.finfo(float).eps, maxiter=200)
    if abs(excess(root)) > tol:
        raise PrecisionError(f"|h(alpha*) - 1| = {abs(excess(root)):.3e} exceeds tol={tol}", {"alpha": root})
    logging.debug(f"[solve_tail_index] a1={f.a1} b1={f.b1} alpha*={root:.10f}")
    return float(root)
