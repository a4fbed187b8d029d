"""Pure-variable recovery from a tail-correlation matrix.

Variables whose tail correlation is at most ``kappa`` are joined by an edge;
a maximum clique of that graph picks one representative per latent factor,
and every variable nearly comonotone (chi >= 1 - kappa) with a representative
joins its block.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass

import numpy as np

from .chi import ChiMatrix
from .errors import InputError, ParameterError


@dataclass(frozen=True)
class ThresholdGraph:
    adjacency: np.ndarray  # symmetric bool, False diagonal

    def __post_init__(self):
        adj = np.array(self.adjacency, dtype=bool)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise InputError(f"adjacency must be square, got shape {adj.shape}")
        if not np.array_equal(adj, adj.T):
            raise InputError("adjacency must be symmetric")
        if np.any(np.diag(adj)):
            raise InputError("adjacency must have a False diagonal")
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)

    @property
    def d(self) -> int:
        return self.adjacency.shape[0]

    def edges(self) -> list[tuple[int, int]]:
        j, l = np.nonzero(np.triu(self.adjacency, 1))
        return list(zip(j.tolist(), l.tolist()))


@dataclass(frozen=True)
class PureVarResult:
    """Estimated factor count, representatives, pure set and its partition.

    All indices are 0-based.  ``partition[a]`` is the block of the clique
    vertex ``clique[a]``.
    """

    k_hat: int
    clique: list[int]
    pure_set: list[int]
    partition: list[list[int]]

    def __post_init__(self):
        if self.k_hat != len(self.clique) or self.k_hat != len(self.partition):
            raise InputError("k_hat must match clique and partition sizes")
        seen: set[int] = set()
        for rep, block in zip(self.clique, self.partition):
            if rep not in block:
                raise InputError(f"block {block} does not contain its clique vertex {rep}")
            if seen.intersection(block):
                raise InputError("partition blocks overlap")
            seen.update(block)
        if sorted(seen) != list(self.pure_set):
            raise InputError("pure_set must equal the union of the partition blocks")
        if len(set(self.clique) & set(seen)) != self.k_hat:
            raise InputError("clique vertices must be distinct")

    def block_of(self) -> dict[int, int]:
        """Map from variable index to the index of its block."""
        return {j: a for a, block in enumerate(self.partition) for j in block}


def _check_kappa(kappa: float) -> float:
    kappa = float(kappa)
    if not 0.0 < kappa < 0.5:
        raise ParameterError(f"kappa must lie in (0, 1/2), got {kappa!r}")
    return kappa


def _chi_values(chi) -> np.ndarray:
    return chi.values if isinstance(chi, ChiMatrix) else ChiMatrix(chi).values


def build_graph(chi, kappa: float) -> ThresholdGraph:
    """Edge (j, l) iff chi[j, l] <= kappa, for j != l."""
    kappa = _check_kappa(kappa)
    adj = _chi_values(chi) <= kappa
    np.fill_diagonal(adj, False)
    return ThresholdGraph(adj)


# -- maximum clique ---------------------------------------------------------

def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _coloring(P: int, nbrs: list[int]) -> list[tuple[int, int]]:
    """Greedy sequential colouring of ``P`` as (vertex, colour) in colour order.

    Any clique inside the vertices up to a position uses distinct colours, so
    the colour number bounds its size.
    """
    out = []
    color = 0
    uncolored = P
    while uncolored:
        color += 1
        avail = uncolored
        while avail:
            low = avail & -avail
            uncolored &= ~low
            avail &= ~low & ~nbrs[low.bit_length() - 1]
            out.append((low.bit_length() - 1, color))
    return out


def _find_clique(P: int, need: int, nbrs: list[int]) -> list[int] | None:
    """Some clique of exactly ``need`` vertices inside ``P``, or None."""
    if need <= 0:
        return []
    if P.bit_count() < need:
        return None
    colored = _coloring(P, nbrs)
    if colored[-1][1] < need:
        return None
    # highest colours first; once the bound drops below need nothing remains
    for v, color in reversed(colored):
        if color < need:
            return None
        found = _find_clique(P & nbrs[v], need - 1, nbrs)
        if found is not None:
            return [v] + found
        P &= ~(1 << v)
    return None


def max_clique(g: ThresholdGraph, exact: bool = True) -> list[int]:
    """Maximum clique, lexicographically smallest among all maximum cliques.

    The clique number is found by colour-bounded branch and bound (each
    size is a decision problem that stops at the first witness).  The
    lexicographic rule is then met vertex by vertex: the smallest vertex that
    still extends to a maximum clique over larger vertices is fixed.

    ``exact=False`` switches to a greedy heuristic for very large graphs; its
    result is a maximal clique but not necessarily a maximum one.
    """
    d = g.d
    if d == 0:
        return []
    adj = g.adjacency
    weights = [1 << j for j in range(d)]
    nbrs = [sum(w for w, b in zip(weights, row) if b) for row in adj.tolist()]
    if not exact:
        return _greedy_clique(nbrs, d)

    # recursion depth is bounded by the clique size, at most d
    if sys.getrecursionlimit() < d + 100:
        sys.setrecursionlimit(d + 100)
    everything = (1 << d) - 1
    omega = len(_greedy_clique(nbrs, d))
    while _find_clique(everything, omega + 1, nbrs) is not None:
        omega += 1

    clique: list[int] = []
    cand = everything
    for need in range(omega, 0, -1):
        for v in _bits(cand):
            above = cand & nbrs[v] & ~((2 << v) - 1)
            if _find_clique(above, need - 1, nbrs) is not None:
                clique.append(v)
                cand = above
                break
    return clique


def _greedy_clique(nbrs: list[int], d: int) -> list[int]:
    clique: list[int] = []
    cand = (1 << d) - 1
    while cand:
        v = max(_bits(cand), key=lambda u: ((cand & nbrs[u]).bit_count(), -u))
        clique.append(v)
        cand &= nbrs[v]
    return sorted(clique)


# -- PureVar ----------------------------------------------------------------

def pure_var(chi, kappa: float, exact: bool = True) -> PureVarResult:
    """Estimate the factor count, pure variables and their partition.

    Off the high-probability event the raw blocks may overlap; a contested
    variable then goes to the representative with the larger chi value, ties
    to the smaller representative index.
    """
    kappa = _check_kappa(kappa)
    values = _chi_values(chi)
    clique = max_clique(build_graph(values, kappa), exact=exact)
    d = values.shape[0]

    owner = np.full(d, -1)
    strength = np.full(d, -np.inf)
    for a, rep in enumerate(clique):
        row = values[rep]
        members = np.flatnonzero(row >= 1.0 - kappa)
        for l in members:
            if l == rep:
                continue
            # clique is sorted, so the earlier representative wins ties
            if row[l] > strength[l]:
                owner[l], strength[l] = a, row[l]
    for a, rep in enumerate(clique):
        owner[rep] = a

    partition = [sorted(np.flatnonzero(owner == a).tolist()) for a in range(len(clique))]
    pure_set = sorted(np.flatnonzero(owner >= 0).tolist())
    return PureVarResult(
        k_hat=len(clique), clique=list(clique), pure_set=pure_set, partition=partition
    )
