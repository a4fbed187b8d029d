"""Tuning parameters (k, kappa) and structural diagnostics of a loading matrix."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .chi import _as_loading
from .errors import ParameterError

BINARY_TOL = 1e-12
SUPPORT_TOL = 1e-12
KAPPA_CAP = 0.5 - 1e-9

DEFAULT_C_K = 0.25
DEFAULT_C_KAPPA = 0.75


class ClampWarning(UserWarning):
    """An adaptive formula was clamped to keep downstream preconditions valid."""


@dataclass(frozen=True)
class HyperParams:
    k: int
    kappa: float
    mode: str = "fixed"  # "fixed" or "adaptive"

    def __post_init__(self):
        if self.mode not in ("fixed", "adaptive"):
            raise ParameterError(f"unknown mode {self.mode!r}")
        if int(self.k) != self.k or self.k < 1:
            raise ParameterError(f"k must be a positive integer, got {self.k!r}")
        if not 0.0 < self.kappa < 0.5:
            raise ParameterError(f"kappa must lie in (0, 1/2), got {self.kappa!r}")

    def check_n(self, n: int) -> None:
        if self.k > n:
            raise ParameterError(f"k = {self.k} exceeds the sample size n = {n}")


def kappa0(delta: float, n: int, k: int, d: int, bias: float = 0.0) -> float:
    """Lower admissible threshold: bias plus a concentration term.

    ``bias`` stands for the pre-asymptotic bias ``D(k/n)`` of the tail
    correlations.  It depends on the unknown model and is NOT estimated
    here; the default 0 is the oracle (bias-free) case.
    """
    if not 0.0 < delta < 1.0:
        raise ParameterError(f"delta must lie in (0, 1), got {delta!r}")
    if not 1 <= k <= n:
        raise ParameterError(f"k must lie in [1, n], got k={k}, n={n}")
    if d < 2:
        raise ParameterError(f"d must be at least 2, got {d}")
    if bias < 0:
        raise ParameterError(f"bias must be nonnegative, got {bias!r}")
    l1 = math.log(d / delta)
    l2 = math.log(4 * d / delta)
    return (
        bias
        + (math.sqrt(2.0) + math.sqrt(16 * l1) + math.sqrt(16 * l2)) / math.sqrt(k)
        + (6 + 4 * l1 + 8 * l2) / (3 * k)
    )


def adaptive_k(n: int, d: int, c_k: float = DEFAULT_C_K, r: float = 1.0) -> int:
    """``floor(c_k * log(4 d n^2)^(1/(2r+1)) * n^(2r/(2r+1)))`` clamped to [2, n]."""
    if n < 2 or d < 2 or c_k <= 0 or r <= 0:
        raise ParameterError(f"need n >= 2, d >= 2, c_k > 0, r > 0; got {n}, {d}, {c_k}, {r}")
    raw = math.floor(c_k * math.log(4 * d * n * n) ** (1 / (2 * r + 1)) * n ** (2 * r / (2 * r + 1)))
    k = min(max(raw, 2), n)
    if k != raw:
        warnings.warn(f"adaptive k clamped from {raw} to {k} (n={n})", ClampWarning, stacklevel=2)
    return k


def adaptive_kappa(n: int, d: int, c_kappa: float = DEFAULT_C_KAPPA, r: float = 1.0) -> float:
    """``c_kappa * (log(4 d n^2) / n)^(r/(2r+1))``, kept below 1/2."""
    if n < 2 or d < 2 or c_kappa <= 0 or r <= 0:
        raise ParameterError(f"need n >= 2, d >= 2, c_kappa > 0, r > 0; got {n}, {d}, {c_kappa}, {r}")
    raw = c_kappa * (math.log(4 * d * n * n) / n) ** (r / (2 * r + 1))
    if raw >= KAPPA_CAP:
        warnings.warn(f"adaptive kappa clamped from {raw:.6g} to {KAPPA_CAP}", ClampWarning, stacklevel=2)
        return KAPPA_CAP
    return raw


def resolve(n: int, d: int, k=None, kappa=None, c_k=DEFAULT_C_K, c_kappa=DEFAULT_C_KAPPA) -> HyperParams:
    """Fill in whichever of ``k``/``kappa`` is None with its adaptive value."""
    mode = "adaptive" if k is None or kappa is None else "fixed"
    if k is None:
        k = adaptive_k(n, d, c_k)
    if kappa is None:
        kappa = adaptive_kappa(n, d, c_kappa)
    hp = HyperParams(int(k), float(kappa), mode)
    hp.check_n(n)
    return hp


def signal_strength(A) -> float:
    """Smallest distance of a non-binary loading from {0, 1}; 1/2 if none."""
    a = _as_loading(A).values
    binary = (np.abs(a) <= BINARY_TOL) | (np.abs(a - 1.0) <= BINARY_TOL)
    inner = a[~binary]
    if inner.size == 0:
        return 0.5
    return float(np.min(np.minimum(inner, 1.0 - inner)))


def sparsity_index(A) -> int:
    a = _as_loading(A).values
    return int(np.max(np.count_nonzero(a > SUPPORT_TOL, axis=1)))


def pure_rows(A) -> list[int]:
    """Indices of rows that are unit vectors (pure variables)."""
    a = _as_loading(A).values
    return np.flatnonzero(np.count_nonzero(a > SUPPORT_TOL, axis=1) == 1).tolist()


def pure_partition(A) -> list[list[int]]:
    """Pure variables grouped by the factor they load on, in column order."""
    a = _as_loading(A).values
    rows = pure_rows(A)
    return [[j for j in rows if a[j, col] > SUPPORT_TOL] for col in range(a.shape[1])]
