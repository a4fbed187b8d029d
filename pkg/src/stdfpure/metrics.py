"""Scoring an estimated loading matrix against the truth.

Columns are matched with a Hungarian assignment on squared-l2 column
distances; the same matching is used for the loss and the support errors.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .chi import LoadingMatrix, _as_loading
from .errors import AlignmentError, InputError
from .htsp import HtspEstimate
from .hyperparams import SUPPORT_TOL

EXHAUSTIVE_MAX_K = 6
_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class MetricsReport:
    k_recovered: bool
    s_recovered: bool
    i_recovered: bool
    tfnp: float | None = None
    tfpp: float | None = None
    loss_inf2: float | None = None
    permutation: list[int] | None = None
    loss_inf2_exhaustive: float | None = None  # min over all permutations, K <= 6 only

    def __post_init__(self):
        aligned = (self.tfnp, self.tfpp, self.loss_inf2, self.permutation)
        if self.k_recovered and any(v is None for v in aligned):
            raise InputError("alignment metrics are required when K is recovered")
        if not self.k_recovered and any(v is not None for v in aligned):
            raise InputError("alignment metrics are undefined when K is not recovered")


def _assignment_cost(cost: np.ndarray, rows, cols) -> float:
    if len(rows) == 0:
        return 0.0
    sub = cost[np.ix_(rows, cols)]
    r, c = linear_sum_assignment(sub)
    return float(sub[r, c].sum())


def hungarian(cost) -> list[int]:
    """Minimum-cost assignment ``a -> perm[a]``.

    Among optimal assignments the lexicographically smallest is returned:
    rows are fixed one at a time to the smallest column that still admits an
    optimal completion.
    """
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise InputError(f"cost matrix must be square, got shape {cost.shape}")
    if not np.all(np.isfinite(cost)):
        raise InputError("cost matrix has non-finite entries")
    K = cost.shape[0]
    if K == 0:
        return []
    optimum = _assignment_cost(cost, list(range(K)), list(range(K)))
    tol = _TIE_RTOL * max(1.0, abs(optimum), float(np.abs(cost).max()) * K)

    perm: list[int] = []
    fixed = 0.0
    free_cols = list(range(K))
    for a in range(K):
        rest_rows = list(range(a + 1, K))
        for b in free_cols:
            cols = [c for c in free_cols if c != b]
            total = fixed + cost[a, b] + _assignment_cost(cost, rest_rows, cols)
            if total <= optimum + tol:
                perm.append(b)
                fixed += cost[a, b]
                free_cols = cols
                break
        else:  # pragma: no cover - the optimum always has a completion
            raise RuntimeError("no optimal completion found")
    return perm


def _values(A) -> np.ndarray:
    return A.values if isinstance(A, LoadingMatrix) else np.asarray(A, dtype=float)


def align(estimate, truth):
    """Permute the columns of ``truth`` to best match ``estimate``.

    Returns ``(aligned_truth, perm)`` where ``aligned_truth[:, a] = truth[:, perm[a]]``.
    """
    est, tru = _values(estimate), _values(truth)
    if est.shape != tru.shape:
        raise AlignmentError(f"cannot align shapes {est.shape} and {tru.shape}")
    diff = est[:, :, None] - tru[:, None, :]
    cost = np.einsum("jab,jab->ab", diff, diff)
    perm = hungarian(cost)
    return tru[:, perm], perm


def _norm_inf2(m: np.ndarray) -> float:
    return float(np.max(np.sqrt(np.sum(m * m, axis=1))))


def loss_inf2_aligned(estimate, truth) -> float:
    """Max row l2 distance after the Hungarian (Frobenius-optimal) alignment."""
    est, tru = _values(estimate), _values(truth)
    if est.shape[1] != tru.shape[1]:
        return math.inf
    aligned, _ = align(est, tru)
    return _norm_inf2(est - aligned)


def loss_inf2_exhaustive(estimate, truth) -> float:
    """Exact minimum over all column permutations; K! work."""
    est, tru = _values(estimate), _values(truth)
    if est.shape[1] != tru.shape[1]:
        return math.inf
    if est.shape[0] != tru.shape[0]:
        raise AlignmentError(f"row counts differ: {est.shape[0]} vs {tru.shape[0]}")
    K = est.shape[1]
    best = math.inf
    for perm in itertools.permutations(range(K)):
        best = min(best, _norm_inf2(est - tru[:, perm]))
    return best


def loss_inf2(estimate, truth) -> float:
    """Minimum over column permutations of the max row l2 distance.

    ``inf`` when the column counts differ.  Exact for K <= 6; for larger K the
    Hungarian-aligned value is returned, which is an upper bound.
    """
    est = _values(estimate)
    if est.shape[1] != _values(truth).shape[1]:
        return math.inf
    if est.shape[1] <= EXHAUSTIVE_MAX_K:
        return loss_inf2_exhaustive(estimate, truth)
    return loss_inf2_aligned(estimate, truth)


def extremal_directions(A) -> list[list[int]]:
    a = _as_loading(A).values
    return [np.flatnonzero(col > SUPPORT_TOL).tolist() for col in a.T]


def tfnp_tfpp(estimate, aligned_truth) -> tuple[float, float]:
    """Total false negative / false positive proportions of column supports.

    A zero denominator yields 0.
    """
    est, tru = _values(estimate), _values(aligned_truth)
    if est.shape != tru.shape:
        raise InputError(f"shape mismatch: {est.shape} vs {tru.shape}")
    est_supp = est > SUPPORT_TOL
    tru_supp = tru > SUPPORT_TOL
    pos = tru_supp.sum()
    neg = (~tru_supp).sum()
    fn = (tru_supp & ~est_supp).sum()
    fp = (~tru_supp & est_supp).sum()
    tfnp = float(fn / pos) if pos else 0.0
    tfpp = float(fp / neg) if neg else 0.0
    return tfnp, tfpp


def evaluate(estimate: HtspEstimate, truth, true_I=None, true_s: int | None = None) -> MetricsReport:
    """Recovery flags plus, when K is recovered, aligned support errors and loss."""
    from .hyperparams import pure_rows, sparsity_index

    tru = _as_loading(truth)
    if true_I is None:
        true_I = pure_rows(tru)
    if true_s is None:
        true_s = sparsity_index(tru)
    est = estimate.a_hat.values
    if est.shape[0] != tru.d:
        raise InputError(f"estimate has {est.shape[0]} rows, truth has {tru.d}")

    k_rec = estimate.k_hat == tru.K
    s_rec = estimate.s_hat == true_s
    i_rec = sorted(estimate.purevar.pure_set) == sorted(int(j) for j in true_I)
    if not k_rec:
        return MetricsReport(k_rec, s_rec, i_rec)
    aligned, perm = align(est, tru.values)
    tfnp, tfpp = tfnp_tfpp(est, aligned)
    exhaustive = loss_inf2_exhaustive(est, tru.values) if tru.K <= EXHAUSTIVE_MAX_K else None
    return MetricsReport(
        k_recovered=True,
        s_recovered=s_rec,
        i_recovered=i_rec,
        tfnp=tfnp,
        tfpp=tfpp,
        loss_inf2=_norm_inf2(est - aligned),
        permutation=perm,
        loss_inf2_exhaustive=exhaustive,
    )
