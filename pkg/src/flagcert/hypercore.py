"""Uniform hypergraphs: representation, canonical forms, forbidden patterns, densities."""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np

from . import _perm

CANON_BOUND = 9
EXACT_DENSITY_BOUND = 22

PATTERN_EDGES = {"K4minus": 3, "K4": 4, "Kr+1_3": 3}
# above this many vertices 3-graph patterns are found through link graphs
LINK_METHOD_FROM = 12


class CanonicalizationBoundError(ValueError):
    """Raised when exhaustive relabeling would exceed the configured vertex bound."""


class ResourceBoundError(RuntimeError):
    """An exhaustive computation was requested beyond its supported size."""


@dataclass(frozen=True)
class Hypergraph:
    """An r-uniform hypergraph on vertices 0..n-1.

    Edges are stored as sorted tuples in lexicographic order.  Hypergraphs
    with ``n < r`` are valid and have no edges.
    """

    n: int
    edges: tuple = ()
    r: int = 3

    def __post_init__(self):
        if self.r < 2:
            raise ValueError(f"uniformity must be >= 2, got {self.r}")
        if self.n < 0:
            raise ValueError(f"vertex count must be >= 0, got {self.n}")
        norm = set()
        for e in self.edges:
            t = tuple(sorted(int(v) for v in e))
            if len(t) != self.r or len(set(t)) != self.r:
                raise ValueError(f"edge {e!r} does not have {self.r} distinct vertices")
            if t[0] < 0 or t[-1] >= self.n:
                raise ValueError(f"edge {e!r} out of range for n={self.n}")
            if t in norm:
                raise ValueError(f"duplicate edge {t}")
            norm.add(t)
        object.__setattr__(self, "edges", tuple(sorted(norm)))

    @classmethod
    def from_mask(cls, n: int, mask: int, r: int = 3) -> "Hypergraph":
        return cls(n, tuple(_perm.edges_from_mask(int(mask), n, r)), r)

    @property
    def mask(self) -> int:
        return _perm.mask_from_edges(self.edges, self.n, self.r)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def relabel(self, perm) -> "Hypergraph":
        """Image under the vertex map ``v -> perm[v]``."""
        if sorted(perm) != list(range(self.n)):
            raise ValueError("not a permutation of the vertex set")
        return Hypergraph(self.n, tuple(tuple(perm[v] for v in e) for e in self.edges), self.r)

    def __str__(self) -> str:
        return format_hypergraph(self)


@dataclass(frozen=True, order=True)
class CanonicalForm:
    """Minimal mask over all relabelings, with the size data needed to decode it."""

    r: int
    n: int
    code: int

    def hypergraph(self) -> Hypergraph:
        return Hypergraph.from_mask(self.n, self.code, self.r)


def canonical_code(edges, n: int, r: int = 3, fixed: int = 0, bound: int = CANON_BOUND) -> int:
    """Minimal mask over permutations fixing vertices 0..fixed-1."""
    if n > bound:
        raise CanonicalizationBoundError(
            f"canonicalization bound exceeded: n={n} > {bound}"
        )
    if comb(n, r) <= 64 and n <= _perm.TABLE_MAX_N:
        m = _perm.mask_from_edges(edges, n, r)
        return int(_perm.min_relabel(np.array([m], dtype=np.uint64), n, r, fixed)[0])
    return _perm.min_relabel_generic(list(edges), n, r, fixed)


def canonical_form(H: Hypergraph, bound: int = CANON_BOUND) -> CanonicalForm:
    return CanonicalForm(H.r, H.n, canonical_code(H.edges, H.n, H.r, 0, bound))


def is_isomorphic(a: Hypergraph, b: Hypergraph) -> bool:
    if (a.n, a.r, a.num_edges) != (b.n, b.r, b.num_edges):
        return False
    return canonical_form(a) == canonical_form(b)


FACE_CHUNK = 1 << 18


def _face_chunks(n: int, r: int):
    """For chunks of (r+1)-subsets of range(n), the colex ranks of their r faces."""
    it = itertools.combinations(range(n), r + 1)
    while True:
        big = np.array(list(itertools.islice(it, FACE_CHUNK)), dtype=np.int64)
        if len(big) == 0:
            return
        faces = np.empty((len(big), r + 1), dtype=np.int64)
        for k in range(r + 1):
            face = np.delete(big, k, axis=1)
            rank = np.zeros(len(big), dtype=np.int64)
            for i in range(r):
                rank += _perm._comb_column(face[:, i], i + 1)
            faces[:, k] = rank
        yield faces


def edge_indicator(H: Hypergraph) -> np.ndarray:
    """0/1 vector over r-subsets in colex order."""
    ind = np.zeros(comb(H.n, H.r), dtype=np.uint8)
    for e in H.edges:
        ind[_perm.colex_index(e)] = 1
    return ind


def max_edges_on_small_sets(H: Hypergraph) -> int:
    """Largest number of edges spanned by any r+1 vertices (0 if n <= r)."""
    if H.n <= H.r or not H.edges:
        return 0
    ind = edge_indicator(H)
    best = 0
    for faces in _face_chunks(H.n, H.r):
        best = max(best, int(ind[faces].sum(axis=1).max()))
        if best == H.r + 1:
            break
    return best


def _edge_tensor(H: Hypergraph) -> np.ndarray:
    T = np.zeros((H.n, H.n, H.n), dtype=bool)
    if H.edges:
        e = np.array(H.edges, dtype=np.int64)
        for a, b, c in itertools.permutations(range(3)):
            T[e[:, a], e[:, b], e[:, c]] = True
    return T


def _has_k4minus(H: Hypergraph) -> bool:
    # three edges on four vertices share the vertex opposite the missing
    # triple, so they form a triangle in that vertex's link graph
    T = _edge_tensor(H)
    for x in range(H.n):
        A = T[x].astype(np.float32)
        if np.any((A @ A) * A):
            return True
    return False


def _has_k4(H: Hypergraph) -> bool:
    T = _edge_tensor(H)
    e = np.array(H.edges, dtype=np.int64).reshape(-1, 3)
    step = max(1, (1 << 24) // max(H.n, 1))
    for lo in range(0, len(e), step):
        y, z, w = e[lo : lo + step].T
        if np.any(T[:, y, z] & T[:, y, w] & T[:, z, w]):
            return True
    return False


def contains_forbidden(H: Hypergraph, pattern: str = "K4minus") -> bool:
    """Non-induced containment: some r+1 vertices span at least the pattern's edge count."""
    if pattern not in PATTERN_EDGES:
        raise ValueError(f"unknown pattern {pattern!r}")
    if pattern in ("K4minus", "K4") and H.r != 3:
        raise ValueError(f"{pattern} is a 3-uniform pattern; hypergraph has r={H.r}")
    if H.n <= H.r or not H.edges:
        return False
    if H.r == 3 and H.n > LINK_METHOD_FROM:
        return _has_k4(H) if pattern == "K4" else _has_k4minus(H)
    return max_edges_on_small_sets(H) >= PATTERN_EDGES[pattern]


def induced_subhypergraph(H: Hypergraph, S) -> Hypergraph:
    S = sorted(set(int(v) for v in S))
    for v in S:
        if v < 0 or v >= H.n:
            raise ValueError(f"vertex {v} out of range for n={H.n}")
    pos = {v: i for i, v in enumerate(S)}
    edges = [tuple(pos[v] for v in e) for e in H.edges if all(v in pos for v in e)]
    return Hypergraph(len(S), tuple(edges), H.r)


def edge_density(H: Hypergraph) -> Fraction:
    if H.n < H.r:
        raise ValueError(f"edge density undefined for n={H.n} < r={H.r}")
    return Fraction(H.num_edges, comb(H.n, H.r))


@dataclass(frozen=True)
class LinearDensity:
    """Result of a delta-linear density computation.

    In exact mode ``value`` is the true minimum.  In heuristic mode it is the
    density of ``witness``, hence only an upper bound on the minimum.
    """

    value: Fraction
    witness: tuple
    exact: bool


def _min_size(H: Hypergraph, delta) -> int:
    delta = Fraction(delta)
    if delta <= 0 or delta > 1:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    k = math.ceil(delta * H.n)
    if k < H.r:
        raise ValueError(f"ceil(delta*n) = {k} is below the uniformity {H.r}")
    return k


def linear_density(H: Hypergraph, delta, exact_bound: int = EXACT_DENSITY_BOUND,
                   seed: int = 0, restarts: int = 8) -> LinearDensity:
    """Smallest induced edge density over vertex sets of size >= ceil(delta * n)."""
    k = _min_size(H, delta)
    if H.n <= exact_bound:
        return _linear_density_exact(H, k)
    return _linear_density_heuristic(H, k, seed, restarts)


def _subset_edge_counts(H: Hypergraph) -> np.ndarray:
    """Edge count of H[A] for every vertex bitmask A (subset-sum transform)."""
    n = H.n
    f = np.zeros(1 << n, dtype=np.int32)
    for e in H.edges:
        f[sum(1 << v for v in e)] += 1
    for i in range(n):
        view = f.reshape(-1, 2, 1 << i)
        view[:, 1, :] += view[:, 0, :]
    return f


def _linear_density_exact(H: Hypergraph, k: int) -> LinearDensity:
    counts = _subset_edge_counts(H)
    sizes = np.bitwise_count(np.arange(1 << H.n, dtype=np.uint32))
    best, witness = None, None
    for s in range(k, H.n + 1):
        idx = np.flatnonzero(sizes == s)
        j = idx[np.argmin(counts[idx])]
        val = Fraction(int(counts[j]), comb(s, H.r))
        if best is None or val < best:
            best = val
            witness = tuple(v for v in range(H.n) if (int(j) >> v) & 1)
    return LinearDensity(best, witness, True)


def _linear_density_heuristic(H: Hypergraph, k: int, seed: int, restarts: int) -> LinearDensity:
    # Greedy peeling of the vertex whose removal lowers the density most
    # (largest degree inside the current set), with random tie breaking.
    rng = np.random.default_rng(seed)
    n = H.n
    edges = np.array(H.edges, dtype=np.int64).reshape(-1, H.r)
    best, witness = None, None
    for attempt in range(max(1, restarts)):
        alive = np.ones(n, dtype=bool)
        if attempt > 0:
            # random restarts peel from a random superset of size between k and n
            drop = rng.choice(n, size=int(rng.integers(0, n - k + 1)), replace=False)
            alive[drop] = False
        while True:
            live_edges = edges[alive[edges].all(axis=1)] if len(edges) else edges
            size = int(alive.sum())
            val = Fraction(len(live_edges), comb(size, H.r))
            if best is None or val < best:
                best = val
                witness = tuple(int(v) for v in np.flatnonzero(alive))
            if size <= k:
                break
            deg = np.bincount(live_edges.ravel(), minlength=n) if len(live_edges) else np.zeros(n, int)
            deg = np.where(alive, deg, -1)
            top = np.flatnonzero(deg == deg.max())
            alive[rng.choice(top)] = False
    return LinearDensity(best, witness, False)


# text format --------------------------------------------------------------

_LINE = re.compile(r"r=(\d+) n=(\d+) edges=(-|\d+(?:,\d+)*(?:;\d+(?:,\d+)*)*)")


def format_edges(edges) -> str:
    if not edges:
        return "-"
    return ";".join(",".join(str(v) for v in e) for e in edges)


def format_hypergraph(H: Hypergraph) -> str:
    return f"r={H.r} n={H.n} edges={format_edges(H.edges)}"


def parse_edges(text: str, r: int) -> list[tuple[int, ...]]:
    if text == "-":
        return []
    out = []
    for chunk in text.split(";"):
        e = tuple(int(x) for x in chunk.split(","))
        if len(e) != r:
            raise ValueError(f"edge {chunk!r} does not have {r} vertices")
        if any(a >= b for a, b in zip(e, e[1:])):
            raise ValueError(f"edge {chunk!r} is not strictly increasing")
        out.append(e)
    if any(a >= b for a, b in zip(out, out[1:])):
        raise ValueError("edges are not in strictly increasing lexicographic order")
    return out


def parse_hypergraph(line: str) -> Hypergraph:
    """Strict parser for the one-line text format."""
    m = _LINE.fullmatch(line)
    if m is None:
        raise ValueError(f"malformed hypergraph line: {line!r}")
    r, n = int(m.group(1)), int(m.group(2))
    edges = parse_edges(m.group(3), r)
    return Hypergraph(n, tuple(edges), r)


def read_hypergraphs(text: str) -> list[Hypergraph]:
    """Parse every non-comment, non-blank line of a file."""
    out = []
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        out.append(parse_hypergraph(line))
    return out
