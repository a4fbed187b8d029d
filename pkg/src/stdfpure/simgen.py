"""Synthetic heavy-tailed factor models.

Loading matrices start with a K x K identity block (so every factor has a
pure variable); row K+1 loads on exactly ``s`` factors and every later row
on a uniformly drawn number of factors between 1 and ``s``.  Nonzero
loadings are uniform on the simplex, conditioned on lying in
``[eta, 1 - eta]``.

Factors and noise are standard Pareto on ``[1, inf)`` with ``P(Z > x) = x**-alpha``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chi import DataMatrix, LoadingMatrix, _as_loading
from .errors import GenerationError, InputError, ParameterError

MAX_REJECTIONS = 100_000
_BATCH = 512

# sub-stream tags so that factor, noise and row draws never share a stream
_ROW_STREAM = 0
_FACTOR_STREAM = 1
_NOISE_STREAM = 2


@dataclass(frozen=True)
class ModelSpec:
    kind: str  # "linear" or "max_linear"
    noise: bool
    d: int
    K: int
    eta: float
    s: int
    factor_alpha: float = 1.0
    noise_alpha: float = 2.0

    def __post_init__(self):
        if self.kind not in ("linear", "max_linear"):
            raise ParameterError(f"kind must be 'linear' or 'max_linear', got {self.kind!r}")
        if self.d < 2:
            raise ParameterError(f"d must be at least 2, got {self.d}")
        if not 1 <= self.K <= self.d:
            raise ParameterError(f"K must lie in [1, d], got K={self.K}, d={self.d}")
        if not 1 <= self.s <= self.K:
            raise ParameterError(f"s must lie in [1, K], got s={self.s}, K={self.K}")
        if not 0.0 < self.eta < 0.5:
            raise ParameterError(f"eta must lie in (0, 1/2), got {self.eta!r}")
        if self.factor_alpha <= 0 or self.noise_alpha <= 0:
            raise ParameterError("tail indices must be positive")

    @property
    def label(self) -> str:
        return f"{self.kind}-{'noise' if self.noise else 'nonoise'}"


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(key)))


def _uniform_simplex(rng: np.random.Generator, size: int, dim: int) -> np.ndarray:
    e = rng.standard_exponential((size, dim))
    return e / e.sum(axis=1, keepdims=True)


def _constrained_simplex_row(rng, s_i: int, eta: float) -> np.ndarray:
    if s_i * eta > 1.0:
        raise GenerationError(
            f"infeasible loading constraint: {s_i} entries >= eta={eta} cannot sum to 1"
        )
    tried = 0
    while tried < MAX_REJECTIONS:
        batch = min(_BATCH, MAX_REJECTIONS - tried)
        draws = _uniform_simplex(rng, batch, s_i)
        ok = np.all((draws >= eta) & (draws <= 1.0 - eta), axis=1)
        if ok.any():
            return draws[np.argmax(ok)]
        tried += batch
    raise GenerationError(
        f"rejection sampling failed after {MAX_REJECTIONS} draws for s_i={s_i}, eta={eta}"
    )


def gen_loading_matrix(spec: ModelSpec, seed: int) -> LoadingMatrix:
    """Random loading matrix satisfying the pure-variable structure.

    Each row ``i > K`` draws from its own stream keyed by ``(seed, i)``, so
    growing ``d`` leaves earlier rows untouched.
    """
    d, K, s, eta = spec.d, spec.K, spec.s, spec.eta
    A = np.zeros((d, K))
    A[:K, :K] = np.eye(K)
    for i in range(K, d):
        rng = _stream(seed, _ROW_STREAM, i)
        s_i = s if i == K else int(rng.integers(1, s + 1))
        cols = rng.choice(K, size=s_i, replace=False)
        if s_i == 1:
            A[i, cols[0]] = 1.0
        else:
            A[i, cols] = _constrained_simplex_row(rng, s_i, eta)
    return LoadingMatrix(A)


def sample_pareto(alpha: float, count, seed) -> np.ndarray:
    """I.i.d. standard Pareto draws by inversion, ``U ** (-1/alpha)``."""
    if alpha <= 0:
        raise ParameterError(f"alpha must be positive, got {alpha!r}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(int(seed))
    u = 1.0 - rng.random(count)  # in (0, 1]
    return u ** (-1.0 / alpha)


def tail_loading(A, alpha: float) -> LoadingMatrix:
    """Tail loading matrix implied by raw loadings ``A`` and factor tail index ``alpha``.

    ``Abar[j, a] = A[j, a]**alpha / sum_b A[j, b]**alpha``; for ``alpha = 1``
    and unit row sums this is the identity map.
    """
    a = np.asarray(A, dtype=float)
    if np.any(a < 0):
        raise InputError("raw loadings must be nonnegative")
    p = a ** alpha
    sums = p.sum(axis=1, keepdims=True)
    if np.any(sums == 0):
        raise InputError("every row of the raw loadings needs a positive entry")
    return LoadingMatrix(p / sums)


def raw_loading(Abar, alpha: float) -> np.ndarray:
    """Raw loadings whose implied tail loading matrix is ``Abar``."""
    return _as_loading(Abar).values ** (1.0 / alpha)


def sample_dataset(A, spec: ModelSpec, n: int, seed) -> DataMatrix:
    """Draw ``n`` rows from the (max-)linear factor model with raw loadings ``A``.

    Factors and noise use separate sub-streams of ``seed``; toggling the noise
    leaves the factor draws unchanged.
    """
    a = A.values if isinstance(A, LoadingMatrix) else np.asarray(A, dtype=float)
    if a.shape != (spec.d, spec.K):
        raise InputError(f"loading matrix has shape {a.shape}, spec needs {(spec.d, spec.K)}")
    if n < 2:
        raise ParameterError(f"n must be at least 2, got {n}")
    Z = sample_pareto(spec.factor_alpha, (n, spec.K), _stream(seed, _FACTOR_STREAM))
    if spec.kind == "linear":
        Y = Z @ a.T
    else:
        Y = np.zeros((n, spec.d))
        for col in range(spec.K):
            np.maximum(Y, np.outer(Z[:, col], a[:, col]), out=Y)
    if spec.noise:
        E = sample_pareto(spec.noise_alpha, (n, spec.d), _stream(seed, _NOISE_STREAM))
        Y = Y + E if spec.kind == "linear" else np.maximum(Y, E)
    return DataMatrix(Y)
