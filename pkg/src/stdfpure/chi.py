"""Rank transforms and tail-correlation matrices.

The empirical tail correlation of a pair of columns is the fraction of the
``k`` largest observations of one column that are also among the ``k``
largest of the other.  For a max-linear stable tail dependence function with
loading matrix ``A`` (nonnegative, unit row sums) the population value is
``sum_a min(A[j, a], A[l, a])``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, ParameterError

ROW_SUM_TOL = 1e-9
INTEGRALITY_TOL = 1e-9


def _seed_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(np.random.SeedSequence(int(seed)))


@dataclass(frozen=True)
class DataMatrix:
    """n x d sample, rows are observations."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise InputError(f"data must be a 2-d array, got shape {v.shape}")
        if v.shape[0] < 2 or v.shape[1] < 1:
            raise InputError(f"data needs n >= 2 rows and d >= 1 columns, got {v.shape}")
        if not np.all(np.isfinite(v)):
            bad = np.argwhere(~np.isfinite(v))[0]
            raise InputError(f"non-finite entry at row {bad[0]}, column {bad[1]}")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class RankMatrix:
    ranks: np.ndarray  # int64, each column a permutation of 1..n

    @property
    def n(self) -> int:
        return self.ranks.shape[0]

    @property
    def d(self) -> int:
        return self.ranks.shape[1]


@dataclass(frozen=True)
class ChiMatrix:
    """Symmetric d x d tail-correlation matrix.

    ``k_used`` is the exceedance count behind an empirical matrix and 0 for
    population (model-implied) matrices.
    """

    values: np.ndarray
    k_used: int = 0

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise InputError(f"chi matrix must be square, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InputError("chi matrix has non-finite entries")
        if not np.array_equal(v, v.T):
            raise InputError("chi matrix must be symmetric")
        if np.any(v < 0) or np.any(v > 1):
            raise InputError("chi entries must lie in [0, 1]")
        if not np.all(np.diag(v) == 1.0):
            raise InputError("chi matrix must have unit diagonal")
        if self.k_used < 0:
            raise InputError("k_used must be nonnegative")
        if self.k_used > 0:
            scaled = self.k_used * v
            if np.max(np.abs(scaled - np.round(scaled))) > INTEGRALITY_TOL:
                raise InputError("k_used * chi must be integral for an empirical matrix")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def d(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, idx):
        return self.values[idx]


@dataclass(frozen=True)
class LoadingMatrix:
    """Nonnegative d x K matrix with unit row sums and no all-zero column."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise InputError(f"loading matrix must be a nonempty 2-d array, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InputError("loading matrix has non-finite entries")
        if np.any(v < 0):
            raise InputError("loading matrix entries must be nonnegative")
        sums = v.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)
        if bad.size:
            raise InputError(f"row {bad[0]} sums to {sums[bad[0]]!r}, expected 1")
        empty = np.flatnonzero(~np.any(v > 0, axis=0))
        if empty.size:
            raise InputError(f"column {empty[0]} has no positive entry")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def d(self) -> int:
        return self.values.shape[0]

    @property
    def K(self) -> int:
        return self.values.shape[1]


def _as_data(data) -> DataMatrix:
    return data if isinstance(data, DataMatrix) else DataMatrix(data)


def _as_loading(A) -> LoadingMatrix:
    return A if isinstance(A, LoadingMatrix) else LoadingMatrix(A)


def compute_ranks(data, seed=0) -> RankMatrix:
    """Column-wise ranks 1..n with ties broken by a seeded random order.

    A random permutation is drawn for every column whether or not it has
    ties, so the result depends on the data only through within-column order.
    """
    x = _as_data(data).values
    n, d = x.shape
    rng = _seed_rng(seed)
    ranks = np.empty((n, d), dtype=np.int64)
    positions = np.arange(1, n + 1, dtype=np.int64)
    for j in range(d):
        jitter = rng.permutation(n)
        order = np.lexsort((jitter, x[:, j]))
        ranks[order, j] = positions
    return RankMatrix(ranks)


def empirical_chi(data, k: int, seed=0) -> ChiMatrix:
    """Empirical tail correlation matrix from the top-``k`` exceedances."""
    data = _as_data(data)
    n = data.n
    if isinstance(k, bool) or int(k) != k or not 1 <= k <= n:
        raise ParameterError(f"k must be an integer in [1, {n}], got {k!r}")
    k = int(k)
    ranks = compute_ranks(data, seed).ranks
    exceed = (ranks > n - k).astype(np.float64)
    counts = exceed.T @ exceed
    chi = counts / k
    chi = np.minimum(chi, chi.T)  # exact symmetry; counts are already integral
    np.fill_diagonal(chi, 1.0)
    return ChiMatrix(chi, k_used=k)


def population_chi(A) -> ChiMatrix:
    a = _as_loading(A).values
    d = a.shape[0]
    chi = np.zeros((d, d))
    for col in a.T:
        chi += np.minimum.outer(col, col)
    chi = np.clip(0.5 * (chi + chi.T), 0.0, 1.0)
    np.fill_diagonal(chi, 1.0)
    return ChiMatrix(chi, k_used=0)


def stdf_eval(A, x) -> float:
    """Evaluate the max-linear stdf ``sum_a max_j A[j, a] * x[j]``."""
    a = _as_loading(A).values
    x = np.asarray(x, dtype=float)
    if x.shape != (a.shape[0],):
        raise InputError(f"x must have length {a.shape[0]}, got shape {x.shape}")
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise InputError("x must be finite and nonnegative")
    return float(np.sum(np.max(a * x[:, None], axis=0)))


def preasymptotic_chi_maxlinear(A, t: float) -> ChiMatrix:
    """Pre-asymptotic tail correlation ``t * Cbar(1/t, 1/t)`` of a max-linear
    model with i.i.d. Frechet factors.

    Entry (j, l) is ``2 - t + t * exp(log(1 - 1/t) * sum_a max(A[j,a], A[l,a]))``.
    It differs from :func:`population_chi` by at most ``(1 - chi) / t``.
    """
    if not np.isfinite(t) or t <= 1:
        raise ParameterError(f"t must be a finite real > 1, got {t!r}")
    a = _as_loading(A).values
    d = a.shape[0]
    sum_max = np.zeros((d, d))
    for col in a.T:
        sum_max += np.maximum.outer(col, col)
    # 2 - t + t*exp(u) rewritten as 2 + t*expm1(u) to avoid cancellation for large t
    chi_t = 2.0 + t * np.expm1(np.log1p(-1.0 / t) * sum_max)
    chi_t = np.clip(0.5 * (chi_t + chi_t.T), 0.0, 1.0)
    np.fill_diagonal(chi_t, 1.0)
    return ChiMatrix(chi_t, k_used=0)
