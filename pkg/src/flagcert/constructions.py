"""Extremal constructions: tournament hypergraphs, oriented simplex systems, sparsification."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np

from . import _perm
from .hypercore import Hypergraph, linear_density, EXACT_DENSITY_BOUND


@dataclass(frozen=True)
class Tournament:
    """Orientation bit per pair in colex order; bit set means i -> j for i < j."""

    n: int
    bits: tuple

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("a tournament needs at least one vertex")
        if len(self.bits) != comb(self.n, 2):
            raise ValueError(f"expected {comb(self.n, 2)} orientation bits, got {len(self.bits)}")
        object.__setattr__(self, "bits", tuple(int(b) & 1 for b in self.bits))

    @classmethod
    def from_word(cls, n: int, word: int) -> "Tournament":
        return cls(n, tuple((word >> p) & 1 for p in range(comb(n, 2))))

    @classmethod
    def transitive(cls, n: int) -> "Tournament":
        return cls(n, (1,) * comb(n, 2))

    def matrix(self) -> np.ndarray:
        """Adjacency matrix A with A[i, j] = 1 iff i -> j."""
        A = np.zeros((self.n, self.n), dtype=bool)
        pairs = _perm.subset_array(self.n, 2)
        b = np.array(self.bits, dtype=bool)
        if len(pairs):
            A[pairs[:, 0], pairs[:, 1]] = b
            A[pairs[:, 1], pairs[:, 0]] = ~b
        return A

    def relabel(self, perm) -> "Tournament":
        A = self.matrix()
        B = np.zeros_like(A)
        p = np.asarray(perm)
        B[np.ix_(p, p)] = A
        pairs = _perm.subset_array(self.n, 2)
        return Tournament(self.n, tuple(int(x) for x in B[pairs[:, 0], pairs[:, 1]]) if len(pairs) else ())


def random_tournament(n: int, seed=None) -> Tournament:
    rng = np.random.default_rng(seed)
    return Tournament(n, tuple(int(x) for x in rng.integers(0, 2, size=comb(n, 2))))


def _lex_triples(n: int) -> np.ndarray:
    i = np.arange(n)
    inc = (i[:, None, None] < i[None, :, None]) & (i[None, :, None] < i[None, None, :])
    return np.stack(np.nonzero(inc), axis=1).astype(np.int64)


def cyclic_triples(T: Tournament) -> np.ndarray:
    """(k, 3) array of the cyclically oriented triples, lexicographically sorted."""
    if T.n < 3:
        return np.zeros((0, 3), dtype=np.int64)
    A = T.matrix()
    tri = _lex_triples(T.n)
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    ab, bc, ac = A[a, b], A[b, c], A[a, c]
    # a->b->c->a  or  a<-b<-c<-a
    cyc = (ab == bc) & (ac != ab)
    return tri[cyc]


def _fast_hypergraph(n: int, edges: np.ndarray, r: int) -> Hypergraph:
    # edges are distinct sorted rows already in lexicographic order
    H = object.__new__(Hypergraph)
    object.__setattr__(H, "n", n)
    object.__setattr__(H, "r", r)
    object.__setattr__(H, "edges", tuple(tuple(int(v) for v in e) for e in edges))
    return H


def tournament_hypergraph(T: Tournament) -> Hypergraph:
    if T.n < 3:
        raise ValueError("tournament hypergraphs need n >= 3")
    return _fast_hypergraph(T.n, cyclic_triples(T), 3)


# oriented simplices ---------------------------------------------------------------


@dataclass(frozen=True)
class OrientedSimplexSystem:
    """Points on the moment curve with one orientation bit per (r-1)-subset (colex order)."""

    n: int
    r: int
    bits: tuple

    def __post_init__(self):
        if self.r < 3 or self.n < self.r:
            raise ValueError("need n >= r >= 3")
        if len(self.bits) != comb(self.n, self.r - 1):
            raise ValueError(f"expected {comb(self.n, self.r - 1)} orientation bits")
        object.__setattr__(self, "bits", tuple(int(b) & 1 for b in self.bits))


def random_simplex_system(n: int, r: int, seed=None) -> OrientedSimplexSystem:
    rng = np.random.default_rng(seed)
    return OrientedSimplexSystem(n, r, tuple(int(x) for x in rng.integers(0, 2, size=comb(n, r - 1))))


def facet_side_parity(r: int) -> np.ndarray:
    """Which side of its facet an r-set lies on, relative to the facet's reference side.

    For points on the moment curve the sign of the determinant that decides
    the side of the facet obtained by deleting the k-th point of a sorted
    r-set alternates with k, so the parity is (r - 1 - k) mod 2.
    """
    return (r - 1 - np.arange(r)) % 2


def compliant_sets(S: OrientedSimplexSystem) -> np.ndarray:
    """(k, r) array of r-sets whose facets all point inward or all point outward."""
    n, r = S.n, S.r
    sets = np.array(list(itertools.combinations(range(n), r)), dtype=np.int64)
    bits = np.array(S.bits, dtype=np.int64)
    parity = facet_side_parity(r)
    inward = np.empty(sets.shape, dtype=np.int64)
    for k in range(r):
        face = np.delete(sets, k, axis=1)
        rank = np.zeros(len(sets), dtype=np.int64)
        for i in range(r - 1):
            rank += _perm._comb_column(face[:, i], i + 1)
        inward[:, k] = bits[rank] ^ parity[k]
    ok = np.all(inward == inward[:, :1], axis=1)
    return sets[ok]


def simplex_hypergraph(S: OrientedSimplexSystem) -> Hypergraph:
    return _fast_hypergraph(S.n, compliant_sets(S), S.r)


# sparsification and profiles ------------------------------------------------------


def sparsify(H: Hypergraph, keep, seed=None) -> Hypergraph:
    """Keep every edge independently with probability ``keep``."""
    p = Fraction(keep)
    if p < 0 or p > 1:
        raise ValueError(f"keep probability must lie in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    draws = rng.random(len(H.edges))
    kept = [e for e, u in zip(H.edges, draws) if u < float(p)]
    return _fast_hypergraph(H.n, np.array(kept, dtype=np.int64).reshape(-1, H.r), H.r)


def sparsify_recipe(d) -> Fraction:
    """Keep probability 1/(4d) bringing a lower density d down to 1/4."""
    d = Fraction(d)
    if d < Fraction(1, 4):
        raise ValueError("density must be at least 1/4")
    return 1 / (4 * d)


@dataclass(frozen=True)
class ProfileRow:
    delta: Fraction
    value: Fraction
    exact: bool
    witness_size: int

    def line(self) -> str:
        mode = "exact" if self.exact else "heuristic"
        return (f"delta={self.delta} value={self.value.numerator}/{self.value.denominator} "
                f"value_float={float(self.value):.6f} mode={mode} witness_size={self.witness_size}")


def density_profile(H: Hypergraph, deltas, exact_bound: int = EXACT_DENSITY_BOUND, seed: int = 0,
                    restarts: int = 8) -> list[ProfileRow]:
    rows = []
    for d in deltas:
        res = linear_density(H, Fraction(d), exact_bound=exact_bound, seed=seed, restarts=restarts)
        rows.append(ProfileRow(Fraction(d), res.value, res.exact, len(res.witness)))
    return rows
