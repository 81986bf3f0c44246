"""Isomorph-free generation of admissible hypergraphs, realizable families and flags.

Everything here works on integer masks (see ``_perm``).  Families are grown
one vertex at a time: every representative on n-1 vertices is extended by
each admissible link of a new vertex, and the children are deduplicated by
their canonical codes.  Flags use the same augmentation, with the labelled
vertices 0..s-1 held fixed during canonicalisation.

Admissible means that no r+1 vertices span three or more edges, which for
r = 3 is K4^- -freeness.
"""

from __future__ import annotations

import hashlib
import logging
import os
from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial
from pathlib import Path

import numpy as np

from . import _perm
from .hypercore import (
    Hypergraph,
    ResourceBoundError,
    format_edges,
    format_hypergraph,
    max_edges_on_small_sets,
    parse_edges,
    parse_hypergraph,
)

log = logging.getLogger(__name__)

MAX_EDGES_PER_SMALL_SET = 2
LOOKUP_MAX_BITS = 20
REALIZABLE_MAX_N = 8
ENUM_MAX_N = 7


def cache_dir() -> Path | None:
    """Directory for persisted catalogs and tables; ``FLAGCERT_CACHE=off`` disables it."""
    env = os.environ.get("FLAGCERT_CACHE")
    if env is not None and env.lower() in ("", "0", "off", "none"):
        return None
    path = Path(env) if env else Path.home() / ".cache" / "flagcert"
    path.mkdir(parents=True, exist_ok=True)
    return path


@dataclass(frozen=True)
class TypeGraph:
    """A fully labelled admissible hypergraph; vertex i carries label i."""

    graph: Hypergraph

    def __post_init__(self):
        if max_edges_on_small_sets(self.graph) > MAX_EDGES_PER_SMALL_SET:
            raise ValueError(f"type {self.encode()} is not admissible")

    @property
    def size(self) -> int:
        return self.graph.n

    @property
    def r(self) -> int:
        return self.graph.r

    @property
    def mask(self) -> int:
        return self.graph.mask

    def encode(self) -> str:
        return f"{self.graph.n}:{format_edges(self.graph.edges)}"

    @classmethod
    def parse(cls, text: str, r: int = 3) -> "TypeGraph":
        try:
            k, edges = text.split(":")
            return cls(Hypergraph(int(k), tuple(parse_edges(edges, r)), r))
        except ValueError as exc:
            raise ValueError(f"malformed type {text!r}: {exc}") from None

    def __str__(self):
        return self.encode()


def empty_type(r: int = 3) -> TypeGraph:
    return TypeGraph(Hypergraph(0, (), r))


def vertex_type(r: int = 3) -> TypeGraph:
    return TypeGraph(Hypergraph(1, (), r))


def pair_type(r: int = 3) -> TypeGraph:
    return TypeGraph(Hypergraph(2, (), r))


@dataclass(frozen=True)
class Flag:
    """An admissible hypergraph with an injective embedding ``theta`` of a type."""

    base: Hypergraph
    theta: tuple
    sigma: TypeGraph

    def __post_init__(self):
        if len(self.theta) != self.sigma.size or len(set(self.theta)) != len(self.theta):
            raise ValueError("theta must be injective on the type vertices")
        want = set(self.sigma.graph.edges)
        idx = {v: i for i, v in enumerate(self.theta)}
        got = {
            tuple(sorted(idx[v] for v in e)) for e in self.base.edges if all(v in idx for v in e)
        }
        if got != want:
            raise ValueError("theta does not induce the type")
        if max_edges_on_small_sets(self.base) > MAX_EDGES_PER_SMALL_SET:
            raise ValueError("flag base is not admissible")

    @property
    def size(self) -> int:
        return self.base.n

    def normalized(self) -> Hypergraph:
        """The base relabelled so that theta becomes 0..s-1 (others keep their order)."""
        rest = [v for v in range(self.base.n) if v not in self.theta]
        order = list(self.theta) + rest
        pos = {v: i for i, v in enumerate(order)}
        return self.base.relabel([pos[v] for v in range(self.base.n)])

    def unlabelled(self) -> Hypergraph:
        return self.base


class Catalog:
    """Deterministically ordered representatives of one family.

    ``codes`` are canonical masks in increasing order; member i is the
    hypergraph decoded from ``codes[i]`` with the labelled vertices at
    0..s-1.  The unlabelled family is the special case of the empty type.
    """

    def __init__(self, family: str, n: int, sigma: TypeGraph, codes):
        self.family = family
        self.n = n
        self.sigma = sigma
        self.r = sigma.r
        codes = sorted(int(c) for c in codes)
        self.codes = tuple(codes)
        self.total_bits = comb(n, self.r)
        self._array = np.array(codes, dtype=np.uint64) if self.total_bits <= 64 else None
        self._pos = {c: i for i, c in enumerate(codes)}
        self._lookup = None
        self._digest = None

    @property
    def s(self) -> int:
        return self.sigma.size

    def __len__(self):
        return len(self.codes)

    def __iter__(self):
        return (self.hypergraph(i) for i in range(len(self)))

    def hypergraph(self, i: int) -> Hypergraph:
        return Hypergraph.from_mask(self.n, self.codes[i], self.r)

    def flag(self, i: int) -> Flag:
        return Flag(self.hypergraph(i), tuple(range(self.s)), self.sigma)

    def index(self, code: int) -> int:
        return self._pos[int(code)]

    @property
    def array(self) -> np.ndarray:
        if self._array is None:
            raise ResourceBoundError("catalog masks exceed 64 bits")
        return self._array

    def canonical_codes(self, masks: np.ndarray) -> np.ndarray:
        return _perm.min_relabel(masks, self.n, self.r, fixed=self.s)

    def identify(self, masks) -> np.ndarray:
        """Catalog indices of labelled masks on n vertices (-1 if not a member)."""
        masks = np.ascontiguousarray(masks, dtype=np.uint64)
        if self.total_bits <= LOOKUP_MAX_BITS:
            return self.lookup_table()[masks.astype(np.int64)]
        codes = self.canonical_codes(masks)
        idx = np.searchsorted(self.array, codes)
        idx = np.minimum(idx, len(self) - 1)
        return np.where(self.array[idx] == codes, idx, -1).astype(np.int64)

    def lookup_table(self) -> np.ndarray:
        """Dense mask -> index array built from the orbits of the representatives."""
        if self._lookup is None:
            table = np.full(1 << self.total_bits, -1, dtype=np.int32)
            nperm = factorial(self.n - self.s)
            if len(self):
                images = _perm.relabel_many(self.array, self.n, self.r, np.arange(nperm))
                cols = np.broadcast_to(np.arange(len(self), dtype=np.int32), images.shape)
                table[images.ravel().astype(np.int64)] = cols.ravel()
            self._lookup = table
        return self._lookup

    def header(self) -> str:
        head = f"family={self.family} n={self.n} r={self.r}"
        if self.family == "flags":
            head += f" type={self.sigma.encode()}"
        return head + f" count={len(self)}"

    def dump(self) -> str:
        lines = [self.header()]
        theta = ",".join(str(i) for i in range(self.s)) or "-"
        for i in range(len(self)):
            line = format_hypergraph(self.hypergraph(i))
            if self.family == "flags":
                line += f" theta={theta}"
            lines.append(line)
        return "\n".join(lines) + "\n"

    @property
    def digest(self) -> str:
        if self._digest is None:
            self._digest = hashlib.sha256(self.dump().encode()).hexdigest()[:16]
        return self._digest

    def __repr__(self):
        return f"<Catalog {self.header()}>"


class FamilyCatalog(Catalog):
    """Unlabelled hypergraphs of one size (``family`` is F or E)."""

    def __init__(self, family: str, n: int, r: int, codes, parent: "FamilyCatalog | None" = None):
        super().__init__(family, n, empty_type(r), codes)
        self.parent = parent

    def membership(self) -> np.ndarray:
        """For a sub-catalog, a boolean array over the parent catalog."""
        if self.parent is None:
            return np.ones(len(self), dtype=bool)
        flags = np.zeros(len(self.parent), dtype=bool)
        for c in self.codes:
            flags[self.parent.index(c)] = True
        return flags


class FlagCatalog(Catalog):
    def __init__(self, sigma: TypeGraph, n: int, codes):
        super().__init__("flags", n, sigma, codes)


def parse_catalog(text: str) -> Catalog:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    fields = dict(tok.split("=", 1) for tok in lines[0].split())
    family, n, r, count = fields["family"], int(fields["n"]), int(fields["r"]), int(fields["count"])
    codes = []
    for ln in lines[1:]:
        if family == "flags":
            ln, theta = ln.rsplit(" theta=", 1)
        codes.append(parse_hypergraph(ln).mask)
    if len(codes) != count:
        raise ValueError(f"catalog declares {count} members, found {len(codes)}")
    if family == "flags":
        cat = FlagCatalog(TypeGraph.parse(fields["type"], r), n, codes)
    else:
        cat = FamilyCatalog(family, n, r, codes)
    if list(cat.codes) != codes:
        raise ValueError("catalog members are not in canonical order")
    return cat


# augmentation ---------------------------------------------------------------


@lru_cache(maxsize=None)
def _link_limits(n_parent: int, r: int):
    """Per r-subset R of the parent, which link values keep {v} + R admissible.

    Returns two boolean matrices of shape (C(n_parent, r), 2^k): the first
    for R an edge (at most one link face allowed), the second for R a
    non-edge (at most two).
    """
    k = comb(n_parent, r - 1)
    if k > 22:
        raise ResourceBoundError(f"link space 2^{k} too large")
    links = np.arange(1 << k, dtype=np.int64)
    small = _perm.subsets(n_parent, r - 1)
    findex = {q: i for i, q in enumerate(small)}
    rsets = _perm.subsets(n_parent, r)
    if_edge = np.ones((len(rsets), 1 << k), dtype=bool)
    if_non = np.ones((len(rsets), 1 << k), dtype=bool)
    for t, R in enumerate(rsets):
        cnt = np.zeros(1 << k, dtype=np.int8)
        for drop in range(r):
            q = R[:drop] + R[drop + 1 :]
            bit = k - 1 - findex[q]
            cnt += ((links >> bit) & 1).astype(np.int8)
        if_edge[t] = cnt <= MAX_EDGES_PER_SMALL_SET - 1
        if_non[t] = cnt <= MAX_EDGES_PER_SMALL_SET
    return if_edge, if_non


def valid_links(parent_mask: int, n_parent: int, r: int) -> np.ndarray:
    """All link masks of a new vertex that keep the parent admissible."""
    k = comb(n_parent, r - 1)
    if n_parent < r:
        return np.arange(1 << k, dtype=np.uint64)
    if_edge, if_non = _link_limits(n_parent, r)
    total = comb(n_parent, r)
    is_edge = np.array([(parent_mask >> (total - 1 - t)) & 1 for t in range(total)], dtype=bool)
    ok = np.where(is_edge[:, None], if_edge, if_non).all(axis=0)
    return np.flatnonzero(ok).astype(np.uint64)


def augment(parent_codes, n_parent: int, r: int, fixed: int) -> list[int]:
    """Canonical codes of all admissible one-vertex extensions."""
    n = n_parent + 1
    shift = np.uint64(comb(n_parent, r - 1))
    found = []
    for pm in parent_codes:
        links = valid_links(int(pm), n_parent, r)
        children = (np.uint64(pm) << shift) | links
        found.append(children)
    if not found:
        return []
    children = np.unique(np.concatenate(found))
    if comb(n, r) <= 64 and n <= _perm.TABLE_MAX_N:
        codes = np.unique(_perm.min_relabel(children, n, r, fixed))
        return [int(c) for c in codes]
    codes = {
        _perm.min_relabel_generic(_perm.edges_from_mask(int(c), n, r), n, r, fixed)
        for c in children
    }
    return sorted(codes)


def _grow(start_code: int, start_n: int, target_n: int, r: int, fixed: int) -> list[int]:
    codes = [start_code]
    for n_parent in range(start_n, target_n):
        codes = augment(codes, n_parent, r, fixed)
        log.debug("grew to n=%d: %d classes", n_parent + 1, len(codes))
    return codes


def _cached(name: str, build):
    root = cache_dir()
    if root is None:
        return build()
    path = root / name
    if path.exists():
        return parse_catalog(path.read_text())
    cat = build()
    tmp = path.with_suffix(".tmp")
    tmp.write_text(cat.dump())
    tmp.replace(path)
    return cat


def enumerate_admissible(n: int, r: int = 3) -> FamilyCatalog:
    """One representative per isomorphism class of admissible n-vertex r-graphs."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n > ENUM_MAX_N:
        raise ResourceBoundError(f"exhaustive enumeration limited to n <= {ENUM_MAX_N}")
    return _admissible(int(n), int(r))


@lru_cache(maxsize=None)
def _admissible(n: int, r: int) -> FamilyCatalog:
    def build():
        return FamilyCatalog("F", n, r, _grow(0, 0, n, r, 0))

    return _cached(f"F-n{n}-r{r}.txt", build) if n >= 6 else build()


def tournament_masks(n: int, chunk: int = 1 << 20):
    """Yield arrays of cyclic-triple masks, one entry per tournament on n vertices.

    Tournaments are integers with one bit per pair (i<j) in colex order;
    a set bit means i -> j.
    """
    if n > REALIZABLE_MAX_N:
        raise ResourceBoundError(f"exhaustive tournament scan limited to n <= {REALIZABLE_MAX_N}")
    pairs = {p: i for i, p in enumerate(_perm.subsets(n, 2))}
    triples = _perm.subsets(n, 3)
    total = len(triples)
    words_total = 1 << len(pairs)
    for lo in range(0, words_total, chunk):
        w = np.arange(lo, min(words_total, lo + chunk), dtype=np.uint64)
        out = np.zeros(len(w), dtype=np.uint64)
        for t, (a, b, c) in enumerate(triples):
            ab = (w >> np.uint64(pairs[(a, b)])) & np.uint64(1)
            bc = (w >> np.uint64(pairs[(b, c)])) & np.uint64(1)
            ac = (w >> np.uint64(pairs[(a, c)])) & np.uint64(1)
            # a->b->c->a or the reverse
            cyc = (ab & bc & (ac ^ np.uint64(1))) | ((ab | bc) ^ np.uint64(1)) & ac
            out |= cyc << np.uint64(total - 1 - t)
        yield out


@lru_cache(maxsize=None)
def enumerate_realizable(n: int) -> FamilyCatalog:
    """Classes of F_n that occur as cyclic-triple hypergraphs of n-vertex tournaments.

    The set of tournament masks is closed under relabeling, so a class is
    realizable exactly when its canonical representative occurs among them.
    """
    if n > REALIZABLE_MAX_N:
        raise ResourceBoundError(f"exhaustive tournament scan limited to n <= {REALIZABLE_MAX_N}")
    family = enumerate_admissible(n, 3)

    def build():
        seen = np.unique(np.concatenate(list(tournament_masks(n))))
        hit = np.isin(family.array, seen)
        return FamilyCatalog("E", n, 3, family.array[hit], parent=family)

    if n >= 6:
        cat = _cached(f"E-n{n}-r3.txt", build)
        cat.parent = family
        return cat
    return build()


@lru_cache(maxsize=None)
def enumerate_flags(sigma: TypeGraph, size: int) -> FlagCatalog:
    """All sigma-flags on ``size`` vertices up to label-preserving isomorphism."""
    if size < sigma.size:
        raise ValueError(f"flag size {size} below type size {sigma.size}")

    def build():
        codes = _grow(sigma.mask, sigma.size, size, sigma.r, sigma.size)
        return FlagCatalog(sigma, size, codes)

    key = hashlib.sha256(sigma.encode().encode()).hexdigest()[:10]
    if size >= 6:
        return _cached(f"flags-{key}-n{size}-r{sigma.r}.txt", build)
    return build()


def enumerate_types(k: int, r: int = 3) -> list[TypeGraph]:
    """One type per isomorphism class of admissible k-vertex hypergraphs."""
    return [TypeGraph(H) for H in enumerate_admissible(k, r)]


def type_by_name(name: str, r: int = 3) -> TypeGraph:
    """Resolve a type given by structural name or by its ``k:edges`` encoding.

    Names: ``1`` (one vertex), ``2`` (two vertices), ``3e0`` / ``3e1``
    (three vertices with no / one edge), ``0`` (empty type).
    """
    named = {
        "0": "0:-",
        "1": "1:-",
        "2": "2:-",
        "3e0": "3:-",
        "3e1": "3:0,1,2",
    }
    return TypeGraph.parse(named.get(name, name), r)
