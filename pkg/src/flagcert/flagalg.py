"""Exact flag-algebra calculus over admissible 3-graphs.

Vectors are finitely supported maps from catalog indices to Fractions.
Densities, products and averaging are computed by counting induced
sub-configurations of the target catalog members, so every coefficient is
an integer count over a known denominator.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb, perm

import numpy as np

from . import _perm
from .enumeration import (
    Catalog,
    Flag,
    FlagCatalog,
    TypeGraph,
    cache_dir,
    empty_type,
    enumerate_admissible,
    enumerate_flags,
    pair_type,
    vertex_type,
)
from .hypercore import Hypergraph, canonical_code

log = logging.getLogger(__name__)

MAX_SIZE = 7


def catalog_for(sigma: TypeGraph, size: int) -> Catalog:
    if size > MAX_SIZE:
        raise ValueError(f"catalogs are only available up to size {MAX_SIZE}")
    if sigma.size == 0:
        return enumerate_admissible(size, sigma.r)
    return enumerate_flags(sigma, size)


class FlagVector:
    """A formal combination of the members of one catalog."""

    def __init__(self, catalog: Catalog, coeffs=None):
        self.catalog = catalog
        self.coeffs = {}
        for i, c in (coeffs or {}).items():
            c = Fraction(c)
            if c:
                self.coeffs[int(i)] = c

    @classmethod
    def basis(cls, catalog: Catalog, i: int) -> "FlagVector":
        return cls(catalog, {i: 1})

    @classmethod
    def of(cls, member, catalog: Catalog | None = None) -> "FlagVector":
        """The vector of a single Hypergraph or Flag."""
        if isinstance(member, Flag):
            base, sigma = member.normalized(), member.sigma
        else:
            base, sigma = member, empty_type(member.r)
        catalog = catalog or catalog_for(sigma, base.n)
        code = canonical_code(base.edges, base.n, base.r, fixed=sigma.size)
        return cls.basis(catalog, catalog.index(code))

    @property
    def sigma(self) -> TypeGraph:
        return self.catalog.sigma

    @property
    def size(self) -> int:
        return self.catalog.n

    def support(self) -> list[int]:
        return sorted(self.coeffs)

    def __getitem__(self, i):
        return self.coeffs.get(i, Fraction(0))

    def _check(self, other):
        if other.catalog.sigma != self.catalog.sigma or other.size != self.size:
            raise ValueError("vectors live in different catalogs; extend first")

    def __add__(self, other):
        self._check(other)
        out = dict(self.coeffs)
        for i, c in other.coeffs.items():
            out[i] = out.get(i, 0) + c
        return FlagVector(self.catalog, out)

    def __neg__(self):
        return FlagVector(self.catalog, {i: -c for i, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, k):
        if isinstance(k, FlagVector):
            return multiply(self, k)
        k = Fraction(k)
        return FlagVector(self.catalog, {i: k * c for i, c in self.coeffs.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, FlagVector):
            return NotImplemented
        if other.sigma != self.sigma:
            return False
        L = max(self.size, other.size)
        return extend(self, L).coeffs == extend(other, L).coeffs

    def __hash__(self):
        return id(self)

    def dense(self) -> list[Fraction]:
        return [self[i] for i in range(len(self.catalog))]

    def __repr__(self):
        terms = ", ".join(f"{i}: {c}" for i, c in sorted(self.coeffs.items()))
        return f"FlagVector(type={self.sigma}, size={self.size}, {{{terms}}})"


# sequence helpers -------------------------------------------------------------


def _labelled_sequences(s: int, n: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Sequences 0..s-1 + A for every k-subset A of the free vertices, and their complements."""
    free = range(s, n)
    heads, tails = [], []
    for A in itertools.combinations(free, k):
        rest = [v for v in free if v not in A]
        heads.append(list(range(s)) + list(A))
        tails.append(list(range(s)) + rest)
    rows = len(heads)
    return np.array(heads, dtype=np.int64).reshape(rows, s + k), np.array(tails, dtype=np.int64).reshape(rows, n - k)


@lru_cache(maxsize=None)
def _injections(n: int, s: int) -> np.ndarray:
    rows = list(itertools.permutations(range(n), s))
    return np.array(rows, dtype=np.int64).reshape(len(rows), s)


def _host_bits(catalog: Catalog) -> np.ndarray:
    return _perm.mask_bits(catalog.array, catalog.total_bits)


# density tables -------------------------------------------------------------


@dataclass
class DensityTable:
    """p(H, G) for H in ``src`` and G in ``dst`` as counts over one denominator."""

    src: Catalog
    dst: Catalog
    counts: np.ndarray  # (len(src), len(dst)) integer
    denominator: int

    def value(self, i: int, j: int) -> Fraction:
        return Fraction(int(self.counts[i, j]), self.denominator)

    def row(self, i: int) -> list[Fraction]:
        return [Fraction(int(c), self.denominator) for c in self.counts[i]]

    def header(self) -> str:
        head = f"table p src={self.src.n} dst={self.dst.n}"
        if self.src.sigma.size:
            head += f" type={self.src.sigma.encode()}"
        return head

    def dump(self) -> str:
        lines = [self.header()]
        for i in range(len(self.src)):
            lines.append(" ".join(_frac(v) for v in self.row(i)))
        return "\n".join(lines) + "\n"


def _frac(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def parse_table(text: str, src: Catalog, dst: Catalog) -> DensityTable:
    lines = text.splitlines()
    head = lines[0].split()
    if head[:2] != ["table", "p"]:
        raise ValueError("not a density table")
    fields = dict(tok.split("=", 1) for tok in head[2:])
    if int(fields["src"]) != src.n or int(fields["dst"]) != dst.n:
        raise ValueError("table sizes do not match catalogs")
    den = comb(dst.n - src.s, src.n - src.s)
    rows = []
    for ln in lines[1:]:
        rows.append([int(Fraction(tok) * den) for tok in ln.split()])
    counts = np.array(rows, dtype=np.int64).reshape(len(src), len(dst))
    table = DensityTable(src, dst, counts, den)
    if table.dump() != text:
        # also rejects unreduced fractions
        raise ValueError("table is not in canonical form")
    return table


_table_memo: dict = {}


def density_table(src: Catalog, dst: Catalog) -> DensityTable:
    """Induced densities between two catalogs of the same type.

    Memoised in process and, for size-7 targets, on disk under the cache
    directory keyed by both catalog digests.
    """
    if src.sigma != dst.sigma:
        raise ValueError("mismatched types")
    key = (src.sigma, src.n, dst.n)
    if key in _table_memo:
        return _table_memo[key]
    root = cache_dir() if dst.n >= 7 else None
    path = root / f"table-{src.digest}-{dst.digest}.txt" if root else None
    if path is not None and path.exists():
        table = parse_table(path.read_text(), src, dst)
    else:
        table = _compute_density_table(src, dst)
        if path is not None:
            path.write_text(table.dump())
    _table_memo[key] = table
    return table


def _compute_density_table(src: Catalog, dst: Catalog) -> DensityTable:
    s = src.s
    counts = np.zeros((len(src), len(dst)), dtype=np.int64)
    if src.n > dst.n:
        return DensityTable(src, dst, counts, 1)
    den = comb(dst.n - s, src.n - s)
    seqs, _ = _labelled_sequences(s, dst.n, src.n - s)
    bits = _host_bits(dst)
    sub = _perm.submasks(bits, seqs, dst.n, dst.r)  # (G, S)
    idx = src.identify(sub.ravel()).reshape(sub.shape)
    g = np.broadcast_to(np.arange(len(dst))[:, None], idx.shape)
    np.add.at(counts, (idx.ravel(), g.ravel()), 1)
    return DensityTable(src, dst, counts, den)


def density(H, G) -> Fraction:
    """p(H, G) by direct enumeration of vertex subsets of G.

    Accepts two Hypergraphs or two Flags of the same type.  This path uses
    only canonical codes and is independent of the table machinery.
    """
    if isinstance(H, Flag) != isinstance(G, Flag):
        raise ValueError("cannot compare a flag with an unlabelled hypergraph")
    if isinstance(H, Flag):
        if H.sigma != G.sigma:
            raise ValueError("mismatched types")
        s, h, g = H.sigma.size, H.normalized(), G.normalized()
    else:
        s, h, g = 0, H, G
    if h.n > g.n:
        return Fraction(0)
    target = canonical_code(h.edges, h.n, h.r, fixed=s)
    hits = 0
    total = 0
    for A in itertools.combinations(range(s, g.n), h.n - s):
        verts = list(range(s)) + list(A)
        pos = {v: i for i, v in enumerate(verts)}
        sub = [tuple(pos[v] for v in e) for e in g.edges if all(v in pos for v in e)]
        total += 1
        if canonical_code(sub, h.n, h.r, fixed=s) == target:
            hits += 1
    return Fraction(hits, total)


def extend(v: FlagVector, size: int | None = None) -> FlagVector:
    """Rewrite v in the basis of a larger size by the chain rule."""
    size = v.size + 1 if size is None else size
    if size < v.size:
        raise ValueError("cannot extend to a smaller size")
    if size == v.size:
        return v
    dst = catalog_for(v.sigma, size)
    table = density_table(v.catalog, dst)
    den = table.denominator
    out = {}
    for i, c in v.coeffs.items():
        row = table.counts[i]
        for j in np.flatnonzero(row):
            out[int(j)] = out.get(int(j), 0) + c * int(row[j])
    return FlagVector(dst, {j: c / den for j, c in out.items()})


# products -----------------------------------------------------------------


@dataclass
class SplitDensityTable:
    """p(H1, H2; H) stored sparsely as parallel arrays over the nonzero entries."""

    left: Catalog
    right: Catalog
    target: Catalog
    h: np.ndarray
    i1: np.ndarray
    i2: np.ndarray
    count: np.ndarray
    denominator: int

    def value(self, a: int, b: int, h: int) -> Fraction:
        hit = (self.i1 == a) & (self.i2 == b) & (self.h == h)
        return Fraction(int(self.count[hit].sum()), self.denominator)


@lru_cache(maxsize=None)
def _split_table_cached(sigma: TypeGraph, n1: int, n2: int) -> SplitDensityTable:
    s = sigma.size
    left, right = catalog_for(sigma, n1), catalog_for(sigma, n2)
    target = catalog_for(sigma, n1 + n2 - s)
    heads, tails = _labelled_sequences(s, target.n, n1 - s)
    bits = _host_bits(target)
    a = left.identify(_perm.submasks(bits, heads, target.n, target.r).ravel())
    b = right.identify(_perm.submasks(bits, tails, target.n, target.r).ravel())
    H = np.repeat(np.arange(len(target)), len(heads))
    keys = (H * len(left) + a) * len(right) + b
    uniq, cnt = np.unique(keys, return_counts=True)
    h, rem = np.divmod(uniq, len(left) * len(right))
    i1, i2 = np.divmod(rem, len(right))
    return SplitDensityTable(left, right, target, h, i1, i2, cnt, comb(target.n - s, n1 - s))


def split_density_table(sigma: TypeGraph, n1: int, n2: int) -> SplitDensityTable:
    if n1 + n2 - sigma.size > MAX_SIZE:
        raise ValueError(f"product size {n1 + n2 - sigma.size} exceeds available catalogs")
    return _split_table_cached(sigma, n1, n2)


def multiply(a: FlagVector, b: FlagVector) -> FlagVector:
    """Bilinear extension of the flag product."""
    if a.sigma != b.sigma:
        raise ValueError("mismatched types")
    table = split_density_table(a.sigma, a.size, b.size)
    acc: dict[int, Fraction] = {}
    ca, cb = a.coeffs, b.coeffs
    for h, i, j, c in zip(table.h.tolist(), table.i1.tolist(), table.i2.tolist(), table.count.tolist()):
        if i in ca and j in cb:
            acc[h] = acc.get(h, 0) + ca[i] * cb[j] * c
    return FlagVector(table.target, {h: v / table.denominator for h, v in acc.items()})


# averaging ------------------------------------------------------------------


@dataclass
class AveragingFactors:
    """For each flag of a catalog, its unlabelled class and the count behind p_G."""

    flags: Catalog
    unlabelled: Catalog
    owner: np.ndarray  # index into unlabelled catalog
    counts: np.ndarray  # embeddings yielding the flag
    denominator: int  # falling factorial n (n-1) ... (n-s+1)

    def p(self, i: int) -> Fraction:
        return Fraction(int(self.counts[i]), self.denominator)


@lru_cache(maxsize=None)
def averaging_factors(sigma: TypeGraph, size: int) -> AveragingFactors:
    flags = catalog_for(sigma, size)
    plain = enumerate_admissible(size, sigma.r)
    s = sigma.size
    inj = _injections(size, s)
    seqs = np.array([list(t) + [v for v in range(size) if v not in t] for t in inj], dtype=np.int64)
    seqs = seqs.reshape(len(inj), size)
    bits = _host_bits(plain)
    full = _perm.submasks(bits, seqs, size, sigma.r)  # labelled relabelings of every G
    head = _perm.submasks(bits, inj, size, sigma.r) if s else np.zeros_like(full)
    ok = head == np.uint64(sigma.mask)
    g_idx, t_idx = np.nonzero(ok)
    f_idx = flags.identify(full[g_idx, t_idx])
    counts = np.bincount(f_idx, minlength=len(flags))
    owner = np.full(len(flags), -1, dtype=np.int64)
    owner[f_idx] = g_idx
    return AveragingFactors(flags, plain, owner, counts, perm(size, s))


def average(v: FlagVector) -> FlagVector:
    """The downward operator: each flag G maps to p_G times its unlabelled hypergraph."""
    fac = averaging_factors(v.sigma, v.size)
    out: dict[int, Fraction] = {}
    for i, c in v.coeffs.items():
        g = int(fac.owner[i])
        out[g] = out.get(g, 0) + c * fac.p(i)
    return FlagVector(fac.unlabelled, out)


def averaged_product_counts(sigma: TypeGraph, m1: int, m2: int, target: Catalog):
    """Coefficients of every unlabelled G in the averaged products of flag pairs.

    For each G in ``target`` (size m1 + m2 - |sigma|), each injection theta
    of the type that induces sigma and each split of the remaining vertices
    into A (size m1 - s) and B, count the pair (flag(theta, A), flag(theta, B)).
    The coefficient of G in the averaged product of f1 and f2 is then
    ``count / denominator``.  Returns arrays (g, f1, f2, count) and the
    denominator.
    """
    s = sigma.size
    N = target.n
    if m1 + m2 - s != N:
        raise ValueError("product does not land at the target size")
    c1, c2 = catalog_for(sigma, m1), catalog_for(sigma, m2)
    bits = _host_bits(target)
    inj = _injections(N, s)
    splits = list(itertools.combinations(range(N - s), m1 - s))
    keys = []
    step = max(1, 2048 // max(1, len(splits)))
    for lo in range(0, len(inj), step):
        th = inj[lo : lo + step]
        if s:
            head = _perm.submasks(bits, th, N, target.r)
            ok = head == np.uint64(sigma.mask)
        else:
            ok = np.ones((len(target), len(th)), dtype=bool)
        if not ok.any():
            continue
        rest = np.array([[v for v in range(N) if v not in t] for t in th], dtype=np.int64)
        rest = rest.reshape(len(th), N - s)
        for A in splits:
            B = [i for i in range(N - s) if i not in A]
            seqA = np.concatenate([th, rest[:, list(A)]], axis=1)
            seqB = np.concatenate([th, rest[:, B]], axis=1)
            g, t = np.nonzero(ok)
            ma = _perm.submasks(bits, seqA, N, target.r)[g, t]
            mb = _perm.submasks(bits, seqB, N, target.r)[g, t]
            fa, fb = c1.identify(ma), c2.identify(mb)
            keys.append((g * len(c1) + fa) * len(c2) + fb)
    if keys:
        uniq, cnt = np.unique(np.concatenate(keys), return_counts=True)
    else:
        uniq, cnt = np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    g, rem = np.divmod(uniq, len(c1) * len(c2))
    f1, f2 = np.divmod(rem, len(c2))
    den = perm(N, s) * comb(N - s, m1 - s)
    return g, f1, f2, cnt.astype(np.int64), den


# rho, kappa and the butterfly ------------------------------------------------------


def rho() -> Hypergraph:
    """A single edge on three vertices."""
    return Hypergraph(3, ((0, 1, 2),))


def rho_rooted() -> FlagVector:
    """The edge on three vertices with one labelled vertex."""
    return FlagVector.of(Flag(rho(), (0,), vertex_type()))


def rooted_pair_flag(kind: str) -> FlagVector:
    """The one-extra-vertex flag over the 2-vertex type: ``edge`` or ``nonedge``."""
    if kind not in ("edge", "nonedge"):
        raise ValueError(f"unknown flag {kind!r}")
    base = rho() if kind == "edge" else Hypergraph(3, ())
    return FlagVector.of(Flag(base, (0, 1), pair_type()))


def unlabelled_triple_is_edge(catalog: Catalog, i: int) -> bool:
    """Whether the free vertices of a size |sigma|+3 flag span an edge."""
    s = catalog.s
    return tuple(range(s, s + 3)) in catalog.hypergraph(i).edges


def build_kappa(kind: str = "edge") -> tuple[FlagVector, FlagVector]:
    """The cube of a rooted-pair flag and its part on flags whose free triple is an edge."""
    F = rooted_pair_flag(kind)
    kappa = multiply(multiply(F, F), F)
    plus = {i: c for i, c in kappa.coeffs.items() if unlabelled_triple_is_edge(kappa.catalog, i)}
    return kappa, FlagVector(kappa.catalog, plus)


def kappa_difference(kind: str = "edge") -> FlagVector:
    kappa, plus = build_kappa(kind)
    return 4 * plus - kappa


def kappa_inequality_vector(gamma, kind: str = "edge", size: int = 7) -> FlagVector:
    """gamma times the averaged lower-density inequality, expanded at ``size``."""
    gamma = Fraction(gamma)
    if gamma < 0:
        raise ValueError("multipliers must be non-negative")
    base = extend(average(kappa_difference(kind)), size)
    return gamma * base


# butterfly ---------------------------------------------------------------------


def butterfly() -> Hypergraph:
    """Two edges sharing exactly one vertex, on five vertices."""
    return Hypergraph(5, ((0, 1, 2), (0, 3, 4)))


def contains_butterfly(H: Hypergraph) -> bool:
    """Non-induced containment: two edges meeting in exactly one vertex."""
    if H.n < 5:
        return False
    edges = [set(e) for e in H.edges]
    return any(len(a & b) == 1 for a, b in itertools.combinations(edges, 2))


@dataclass
class EdgeBoundReport:
    support_all_contain_B: bool
    average_rho1_equals_rho: bool
    support_size: int
    averaged_support_size: int
    counterexamples: list = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return self.support_all_contain_B and self.average_rho1_equals_rho and self.support_size > 0

    def lines(self) -> list[str]:
        return [
            f"support_all_contain_B={str(self.support_all_contain_B).lower()}",
            f"average_rho1_equals_rho={str(self.average_rho1_equals_rho).lower()}",
            f"rho1_squared_support={self.support_size}",
            f"averaged_support={self.averaged_support_size}",
            "implication=" + ("butterfly_density_zero_implies_edge_density_zero" if self.holds else "not_established"),
        ]


def cauchy_schwarz_edge_bound() -> EdgeBoundReport:
    """Check the squared rooted edge is supported on butterfly-containing flags.

    If every positively weighted flag of rho1^2 contains the butterfly, a
    limit with zero (non-induced) butterfly density has
    phi(rho)^2 = phi([[rho1]])^2 <= phi([[rho1^2]]) = 0.
    """
    r1 = rho_rooted()
    sq = multiply(r1, r1)
    bad = [i for i, c in sq.coeffs.items() if c > 0 and not contains_butterfly(sq.catalog.hypergraph(i))]
    avg = average(sq)
    bad_avg = [g for g, c in avg.coeffs.items() if c > 0 and not contains_butterfly(avg.catalog.hypergraph(g))]
    same = average(r1) == FlagVector.of(rho())
    return EdgeBoundReport(
        support_all_contain_B=not bad and not bad_avg,
        average_rho1_equals_rho=same,
        support_size=len(sq.coeffs),
        averaged_support_size=len(avg.coeffs),
        counterexamples=bad + bad_avg,
    )
