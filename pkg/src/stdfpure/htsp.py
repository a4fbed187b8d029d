"""Loading-matrix estimation: average, hard-threshold, project onto the simplex.

Given the PureVar partition, a non-pure row is first estimated by averaging
its tail correlation with each block, small entries are zeroed, and the
surviving entries are projected onto the probability simplex.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chi import ChiMatrix, LoadingMatrix
from .errors import InputError
from .purevar import PureVarResult, _check_kappa, _chi_values, pure_var


@dataclass(frozen=True)
class HtspEstimate:
    a_hat: LoadingMatrix
    purevar: PureVarResult
    s_hat: int
    kappa_used: float
    fallback_rows: list[int] = field(default_factory=list)  # rows rescued after thresholding

    @property
    def k_hat(self) -> int:
        return self.purevar.k_hat


def initial_rows(chi, pv: PureVarResult) -> np.ndarray:
    """Pure rows become unit vectors; other rows average chi over each block."""
    values = _chi_values(chi)
    d = values.shape[0]
    if any(not block for block in pv.partition):
        raise InputError("empty partition block")
    if pv.pure_set and max(pv.pure_set) >= d:
        raise InputError("PureVar result does not match the chi dimension")
    out = np.empty((d, pv.k_hat))
    for a, block in enumerate(pv.partition):
        out[:, a] = values[:, block].mean(axis=1)
    np.clip(out, 0.0, 1.0, out=out)
    for a, block in enumerate(pv.partition):
        out[block, :] = 0.0
        out[block, a] = 1.0
    return out


def hard_threshold(m, kappa: float, pure_rows=(), return_fallback: bool = False):
    """Zero every entry ``<= kappa`` in the non-pure rows.

    A non-pure row that would become all-zero keeps its largest entry.
    """
    m = np.array(m, dtype=float)
    if not 0.0 <= kappa <= 1.0:
        raise InputError(f"kappa must lie in [0, 1], got {kappa!r}")
    pure = np.zeros(m.shape[0], dtype=bool)
    pure[list(pure_rows)] = True
    out = np.where(m > kappa, m, 0.0)
    out[pure] = m[pure]
    fallback = []
    for j in np.flatnonzero(~pure & ~np.any(out > 0, axis=1)):
        a = int(np.argmax(m[j]))
        out[j, a] = m[j, a]
        fallback.append(int(j))
    if return_fallback:
        return out, fallback
    return out


def simplex_project(w) -> np.ndarray:
    """Euclidean projection of ``w`` onto the probability simplex.

    ``tau = (sum of the rho largest entries - 1) / rho`` with ``rho`` the
    largest index whose sorted entry exceeds the running threshold; the
    result is ``max(w - tau, 0)``.
    """
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise InputError("simplex_project needs a nonempty 1-d vector")
    u = np.sort(w, kind="stable")[::-1]
    css = np.cumsum(u)
    b = np.arange(1, w.size + 1)
    rho = b[u > (css - 1.0) / b][-1]
    tau = (css[rho - 1] - 1.0) / rho
    return np.maximum(w - tau, 0.0)


def simplex_project_support(w) -> np.ndarray:
    """Project only the nonzero entries of ``w``; zeros stay zero."""
    w = np.asarray(w, dtype=float)
    support = w > 0
    if not np.any(support):
        raise InputError("cannot project an all-zero vector on its support")
    out = np.zeros_like(w)
    out[support] = simplex_project(w[support])
    return out


def htsp(chi, kappa: float, exact: bool = True) -> HtspEstimate:
    """Run PureVar and the threshold-and-project estimator on ``chi``."""
    kappa = _check_kappa(kappa)
    if not isinstance(chi, ChiMatrix):
        chi = ChiMatrix(chi)
    pv = pure_var(chi, kappa, exact=exact)
    a1 = initial_rows(chi, pv)
    a2, fallback = hard_threshold(a1, kappa, pv.pure_set, return_fallback=True)
    a_hat = np.zeros_like(a2)
    pure = set(pv.pure_set)
    for j in range(a2.shape[0]):
        a_hat[j] = a2[j] if j in pure else simplex_project_support(a2[j])
    s_hat = int(np.max(np.count_nonzero(a_hat > 0, axis=1)))
    return HtspEstimate(
        a_hat=LoadingMatrix(a_hat),
        purevar=pv,
        s_hat=s_hat,
        kappa_used=kappa,
        fallback_rows=fallback,
    )
