"""Observation matrices and the top eigenvalues of XX^T."""

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Union

import numpy as np
from scipy.linalg import eigh

from .errors import NumericError, ParameterError
from .processes import ProcessSpec, simulate_paths
from .streams import RandomStreams

CLIP_WARN_RATIO = 1e-10
ROW_TAG = "row"


@dataclass(frozen=True)
class ObservationMatrix:
    """p x n data matrix; row i is an independent copy of the row process."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.atleast_2d(np.asarray(self.entries, dtype=float))
        if entries.ndim != 2 or entries.shape[0] < 1 or entries.shape[1] < 1:
            raise ParameterError(f"expected a non-empty 2-D matrix, got shape {entries.shape}")
        object.__setattr__(self, "entries", entries)

    @property
    def p(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: np.ndarray
    normalizer: float = 1.0

    def __post_init__(self):
        if not self.normalizer > 0:
            raise ParameterError(f"normalizer must be positive, got {self.normalizer}")

    @property
    def normalized(self) -> np.ndarray:
        return self.eigenvalues / self.normalizer

    def with_normalizer(self, normalizer: float) -> "SpectrumResult":
        return replace(self, normalizer=normalizer)


@dataclass(frozen=True)
class DiagonalComparison:
    """Top eigenvalues next to the top row sums of squares (the diagonal of XX^T)."""

    eigenvalues: np.ndarray
    row_sums: np.ndarray
    max_entry_sq: float
    max_abs_row_sum: float
    max_abs_col_sum: float

    @property
    def ratio_max_diag(self) -> float:
        return float(self.eigenvalues[0] / self.row_sums[0])

    @property
    def ratio_max_entry(self) -> float:
        return float(self.eigenvalues[0] / self.max_entry_sq)

    @property
    def sandwich_holds(self) -> bool:
        """max_i sum_t X_it^2 <= lambda_max <= ||X||_inf ||X||_1, up to rounding."""
        slack = 1e-9 * max(self.eigenvalues[0], 1.0)
        upper = self.max_abs_row_sum * self.max_abs_col_sum
        return bool(self.row_sums[0] - slack <= self.eigenvalues[0] <= upper + slack)

    @property
    def ratio_row_norm(self) -> float:
        """lambda_max / ||X||_inf^2; tends to 1 when p >= n and extremes do not cluster."""
        return float(self.eigenvalues[0] / self.max_abs_row_sum**2)


def build_matrix(spec: ProcessSpec, p: int, n: int, streams: Union[RandomStreams, int], rep: int = 0) -> ObservationMatrix:
    """p independent paths of length n; row i uses the stream (seed, 'row', rep, i)."""
    if p < 1 or n < 1:
        raise ParameterError(f"p and n must be >= 1, got p={p}, n={n}")
    if not isinstance(streams, RandomStreams):
        streams = RandomStreams(streams)
    return ObservationMatrix(simulate_paths(spec, n, streams.row_streams(ROW_TAG, rep, p)))


def _gram(entries: np.ndarray) -> np.ndarray:
    """Smaller Gram matrix, accumulated in extended precision."""
    wide = entries.astype(np.longdouble)
    if entries.shape[1] < entries.shape[0]:
        gram = wide.T @ wide
    else:
        gram = wide @ wide.T
    return gram.astype(float)


def _clip(values: np.ndarray, label: str) -> np.ndarray:
    top = float(values.max(initial=0.0))
    lowest = float(values.min(initial=0.0))
    if lowest < -CLIP_WARN_RATIO * max(top, 0.0):
        logging.warning(f"[{label}] negative eigenvalue {lowest:.3e} below -{CLIP_WARN_RATIO}*lambda_max; clipped to 0")
    return np.clip(values, 0.0, None)


def top_eigenvalues(m: ObservationMatrix, k: Optional[int] = None) -> SpectrumResult:
    """Top k eigenvalues of XX^T, descending; normalizer is left at 1 for the caller."""
    limit = min(m.p, m.n)
    k = limit if k is None else k
    if not 1 <= k <= limit:
        raise ParameterError(f"k must satisfy 1 <= k <= {limit}, got {k}")
    if not np.all(np.isfinite(m.entries)):
        raise NumericError("observation matrix has non-finite entries")
    values = eigh(_gram(m.entries), eigvals_only=True, driver="evd")
    values = _clip(values[::-1], "top_eigenvalues")
    return SpectrumResult(values[:k].copy())


def diagonal_comparison(m: ObservationMatrix, k: Optional[int] = None) -> DiagonalComparison:
    spectrum = top_eigenvalues(m, k)
    k = spectrum.eigenvalues.size
    squares = m.entries * m.entries
    row_sums = np.sort(squares.sum(axis=1, dtype=np.longdouble).astype(float))[::-1][:k]
    return DiagonalComparison(
        eigenvalues=spectrum.eigenvalues,
        row_sums=row_sums.copy(),
        max_entry_sq=float(squares.max()),
        max_abs_row_sum=float(np.abs(m.entries).sum(axis=1).max()),
        max_abs_col_sum=float(np.abs(m.entries).sum(axis=0).max()),
    )


def sum_of_squares(m: ObservationMatrix) -> float:
    return math.fsum(np.ravel(m.entries * m.entries))


def growth_dimension(n: int, kind: str, value: float) -> int:
    """p from a growth rule: beta -> n^beta, kappa -> n^kappa, explicit -> value."""
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    if kind in ("beta", "kappa"):
        return max(1, int(round(n**value)))
    if kind == "explicit":
        return max(1, int(value))
    raise ParameterError(f"unknown growth rule '{kind}'")
