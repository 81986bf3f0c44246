"""Semidefinite programs of the flag-algebra method and their exchange format.

Problems are stored in the primal form used by CSDP and the SDPA sparse
format:  maximise tr(C X) subject to tr(A_k X) = b_k, X positive semidefinite.
X is block diagonal with one dense block per type (the Gram matrix over
the type's flag basis) and one diagonal block holding the scalar variables.

Turan mode (bound on the edge density)
    diagonal block = [lam, gamma_1..gamma_q, s_G for G in F_N]
    for each G:  sum_i <M_i(G), X_i> + sum_j gamma_j side_j(G) + s_G - lam = -p(rho, G)
    objective:  maximise -lam

Sign-pattern mode (coefficients vanish on an exempt family, negative elsewhere)
    diagonal block = [gamma_1..gamma_q, t, u, s_G for G not exempt]
    G exempt:      sum_i <M_i(G), X_i> + sum_j gamma_j side_j(G) = 0
    G not exempt:  sum_i <M_i(G), X_i> + sum_j gamma_j side_j(G) + t + s_G = 0
    normalisation: t + u = 1
    objective:  maximise t
"""

from __future__ import annotations

import hashlib
import io
import json
import logging
import math
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import flagalg
from .enumeration import (
    Catalog,
    TypeGraph,
    cache_dir,
    enumerate_admissible,
    enumerate_realizable,
    enumerate_types,
    type_by_name,
)
from .flagalg import FlagVector, catalog_for

log = logging.getLogger(__name__)

MAX_LEVEL = 7
DECIMAL_DIGITS = 30
ASYMMETRY_TOL = 1e-9


class ParityError(ValueError):
    pass


@dataclass
class Block:
    """One type block: M(G)[f1, f2] = count / denominator over the nonzero entries."""

    sigma: TypeGraph
    flags: Catalog
    g: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    count: np.ndarray
    denominator: int

    @property
    def order(self) -> int:
        return len(self.flags)

    def matrix(self, G: int) -> list[list[Fraction]]:
        """Dense exact M(G)."""
        M = [[Fraction(0)] * self.order for _ in range(self.order)]
        hit = self.g == G
        for a, b, c in zip(self.f1[hit].tolist(), self.f2[hit].tolist(), self.count[hit].tolist()):
            M[a][b] = Fraction(c, self.denominator)
        return M

    def upper(self):
        """Entries with f1 <= f2 (the matrices are symmetric)."""
        keep = self.f1 <= self.f2
        return self.g[keep], self.f1[keep], self.f2[keep], self.count[keep]

    def total_mass(self) -> np.ndarray:
        """Sum over G of M(G), as integer counts over the denominator."""
        out = np.zeros((self.order, self.order), dtype=np.int64)
        np.add.at(out, (self.f1, self.f2), self.count)
        return out


@dataclass
class SideConstraint:
    name: str
    vector: FlagVector  # at the level of the problem


@dataclass
class SdpProblem:
    level: int
    mode: str  # "turan" or "signpattern"
    target: Catalog
    objective: FlagVector | None
    blocks: list[Block]
    side: list[SideConstraint] = field(default_factory=list)
    exempt: str = "-"
    exempt_mask: np.ndarray | None = None

    @property
    def types(self) -> list[TypeGraph]:
        return [b.sigma for b in self.blocks]

    def catalog_hash(self) -> str:
        return catalog_hash(self.target, [blk.flags for blk in self.blocks])

    # variable layout of the diagonal block -----------------------------------
    def diag_layout(self) -> dict:
        q = len(self.side)
        n = len(self.target)
        if self.mode == "turan":
            return {"lam": 0, "gamma": list(range(1, 1 + q)), "slack_start": 1 + q, "size": 1 + q + n}
        free = int((~self.exempt_mask).sum())
        return {"gamma": list(range(q)), "t": q, "u": q + 1, "slack_start": q + 2, "size": q + 2 + free}

    @property
    def num_constraints(self) -> int:
        return len(self.target) + (1 if self.mode == "signpattern" else 0)


def catalog_hash(target: Catalog, flag_catalogs) -> str:
    h = hashlib.sha256()
    h.update(target.digest.encode())
    for cat in flag_catalogs:
        h.update(b"|" + cat.digest.encode())
    return h.hexdigest()[:16]


# type selection -------------------------------------------------------------


SIGNPATTERN_TYPES = ("1", "3e0", "3e1")
SIGNPATTERN_SIX = (191, 135, 95, 101, 148)


def default_types(N: int) -> list[TypeGraph]:
    """Every type of the right parity whose flags reach exactly size N."""
    out = []
    for k in range(N % 2, N, 2):
        if (N + k) // 2 > MAX_LEVEL:
            continue
        out.extend(enumerate_types(k))
    return out


def signpattern_types() -> list[TypeGraph]:
    """The eight-type selection for level 7: three small types and five 5-vertex types.

    The five 5-vertex types are identified by their 6-vertex flag counts,
    which are pairwise distinct.
    """
    types = [type_by_name(n) for n in SIGNPATTERN_TYPES]
    by_count = {}
    for t in enumerate_types(5):
        by_count[len(catalog_for(t, 6))] = t
    types.extend(by_count[c] for c in SIGNPATTERN_SIX)
    return types


def check_parity(N: int, sigma: TypeGraph) -> int:
    if (N - sigma.size) % 2:
        raise ParityError(f"type of size {sigma.size} cannot reach level {N}: parity mismatch")
    m = (N + sigma.size) // 2
    if m < sigma.size or m > MAX_LEVEL:
        raise ParityError(f"flag size {m} out of range for type {sigma}")
    return m


# assembly -----------------------------------------------------------------------


def _block_cache_path(sigma: TypeGraph, flags: Catalog, target: Catalog) -> Path | None:
    root = cache_dir()
    if root is None or target.n < 7:
        return None
    return root / f"block-{flags.digest}-{target.digest}.npz"


def build_block(sigma: TypeGraph, target: Catalog) -> Block:
    m = check_parity(target.n, sigma)
    flags = catalog_for(sigma, m)
    path = _block_cache_path(sigma, flags, target)
    if path is not None and path.exists():
        data = np.load(path)
        return Block(sigma, flags, data["g"], data["f1"], data["f2"], data["count"], int(data["den"]))
    g, f1, f2, cnt, den = flagalg.averaged_product_counts(sigma, m, m, target)
    if path is not None:
        tmp = path.with_name(path.name + ".tmp.npz")
        np.savez(tmp, g=g, f1=f1, f2=f2, count=cnt, den=den)
        tmp.replace(path)
    return Block(sigma, flags, g, f1, f2, cnt, den)


def exempt_family(name: str, N: int) -> np.ndarray:
    """Boolean mask over F_N.  ``E<N>`` realizable, ``F<N>`` everything, ``-`` nothing."""
    F = enumerate_admissible(N)
    if name == "-":
        return np.zeros(len(F), dtype=bool)
    if name == f"F{N}":
        return np.ones(len(F), dtype=bool)
    if name == f"E{N}":
        return enumerate_realizable(N).membership()
    raise ValueError(f"unknown exempt family {name!r} at level {N}")


KAPPA_KINDS = ("edge", "nonedge")


def kappa_side_constraints(N: int, kinds=KAPPA_KINDS) -> list[SideConstraint]:
    return [SideConstraint(f"kappa_{k}", flagalg.kappa_inequality_vector(1, k, N)) for k in kinds]


def assemble(N: int, objective: str = "turan", types=None, side=None, exempt: str | None = None) -> SdpProblem:
    """Build the exact problem data at level N."""
    if N > MAX_LEVEL or N < 3:
        raise ValueError(f"level must lie in 3..{MAX_LEVEL}")
    if objective not in ("turan", "signpattern"):
        raise ValueError(f"unknown objective {objective!r}")
    types = default_types(N) if types is None else list(types)
    for t in types:
        check_parity(N, t)
    target = enumerate_admissible(N)
    side = list(side or [])
    for sc in side:
        if sc.vector.size != N or sc.vector.sigma.size != 0:
            raise ValueError(f"side constraint {sc.name} is not an unlabelled level-{N} vector")
    blocks = [build_block(t, target) for t in types]
    if objective == "turan":
        rho = flagalg.extend(FlagVector.of(flagalg.rho()), N)
        return SdpProblem(N, "turan", target, rho, blocks, side, "-", None)
    exempt = exempt or f"E{N}"
    mask = exempt_family(exempt, N)
    return SdpProblem(N, "signpattern", target, None, blocks, side, exempt, mask)


# emission ----------------------------------------------------------------------------


def decimal_string(x: Fraction, digits: int = DECIMAL_DIGITS) -> str:
    """30 significant digits in plain or scientific notation, deterministic."""
    if x == 0:
        return "0"
    with localcontext() as ctx:
        ctx.prec = digits
        d = (Decimal(x.numerator) / Decimal(x.denominator)).normalize()
    return format(d, "g")


def _entries(problem: SdpProblem):
    """Yield (constraint, block, row, col, Fraction) with 1-based indices, constraint 0 the objective."""
    nb = len(problem.blocks)
    lay = problem.diag_layout()
    dblk = nb + 1
    if problem.mode == "turan":
        yield 0, dblk, lay["lam"] + 1, lay["lam"] + 1, Fraction(-1)
    else:
        yield 0, dblk, lay["t"] + 1, lay["t"] + 1, Fraction(1)
    G = len(problem.target)
    per_g: list[list] = [[] for _ in range(G)]
    for bi, blk in enumerate(problem.blocks, start=1):
        g, f1, f2, cnt = blk.upper()
        for gg, a, b, c in zip(g.tolist(), f1.tolist(), f2.tolist(), cnt.tolist()):
            per_g[gg].append((bi, a + 1, b + 1, Fraction(c, blk.denominator)))
    slack = lay["slack_start"]
    free_rank = None
    if problem.mode == "signpattern":
        free_rank = np.cumsum(~problem.exempt_mask) - 1
    for gg in range(G):
        k = gg + 1
        for bi, a, b, v in sorted(per_g[gg]):
            yield k, bi, a, b, v
        diag = []
        for j, sc in enumerate(problem.side):
            c = sc.vector[gg]
            if c:
                diag.append((lay["gamma"][j], c))
        if problem.mode == "turan":
            diag.append((slack + gg, Fraction(1)))
            diag.append((lay["lam"], Fraction(-1)))
        elif not problem.exempt_mask[gg]:
            diag.append((lay["t"], Fraction(1)))
            diag.append((slack + int(free_rank[gg]), Fraction(1)))
        for pos, c in sorted(diag):
            yield k, dblk, pos + 1, pos + 1, c
    if problem.mode == "signpattern":
        k = G + 1
        yield k, dblk, lay["t"] + 1, lay["t"] + 1, Fraction(1)
        yield k, dblk, lay["u"] + 1, lay["u"] + 1, Fraction(1)


def rhs(problem: SdpProblem) -> list[Fraction]:
    if problem.mode == "turan":
        return [-problem.objective[g] for g in range(len(problem.target))]
    return [Fraction(0)] * len(problem.target) + [Fraction(1)]


def render(problem: SdpProblem) -> tuple[str, str]:
    """The SDPA sparse text and its manifest (JSON), both deterministic."""
    out = io.StringIO()
    values: dict[str, str] = {}
    memo: dict[Fraction, str] = {}

    def dec(x: Fraction) -> str:
        s = memo.get(x)
        if s is not None:
            return s
        s = memo[x] = decimal_string(x)
        exact = f"{x.numerator}/{x.denominator}"
        prev = values.setdefault(s, exact)
        if prev != exact:
            raise ValueError(f"decimal {s} does not identify a unique rational")
        return s

    lay = problem.diag_layout()
    sizes = [blk.order for blk in problem.blocks] + [-lay["size"]]
    out.write(f'"flagcert level={problem.level} mode={problem.mode}\n')
    out.write(f"{problem.num_constraints}\n{len(sizes)}\n")
    out.write(" ".join(str(s) for s in sizes) + "\n")
    out.write(" ".join(dec(b) for b in rhs(problem)) + "\n")
    for k, bi, a, b, v in _entries(problem):
        out.write(f"{k} {bi} {a} {b} {dec(v)}\n")
    manifest = {
        "level": problem.level,
        "mode": problem.mode,
        "catalogs": problem.catalog_hash(),
        "target_digest": problem.target.digest,
        "types": [blk.sigma.encode() for blk in problem.blocks],
        "flag_digests": [blk.flags.digest for blk in problem.blocks],
        "block_orders": [blk.order for blk in problem.blocks],
        "side": [sc.name for sc in problem.side],
        "diag": lay,
        "exempt": problem.exempt,
        "values": dict(sorted(values.items())),
    }
    return out.getvalue(), json.dumps(manifest, indent=1, sort_keys=True) + "\n"


def emit(problem: SdpProblem, path) -> Path:
    path = Path(path)
    text, manifest = render(problem)
    path.write_text(text)
    Path(str(path) + ".manifest").write_text(manifest)
    return path


@dataclass
class SdpaFile:
    """Parsed SDPA sparse problem (floating data)."""

    m: int
    sizes: list[int]
    b: np.ndarray
    entries: np.ndarray  # (K, 4) int: constraint, block, row, col
    values: np.ndarray


def read_sdpa(path) -> SdpaFile:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip() and ln[0] not in '"*']
    m = int(lines[0].split()[0])
    nb = int(lines[1].split()[0])
    sizes = [int(x) for x in lines[2].replace(",", " ").replace("{", " ").replace("}", " ").split()][:nb]
    b = np.array([float(x) for x in lines[3].replace(",", " ").split()][:m])
    raw = np.loadtxt(io.StringIO("\n".join(lines[4:])), ndmin=2) if len(lines) > 4 else np.zeros((0, 5))
    return SdpaFile(m, sizes, b, raw[:, :4].astype(np.int64), raw[:, 4])


# solutions ---------------------------------------------------------------------------


@dataclass
class SolverSolution:
    objective: float
    blocks: list[np.ndarray]  # dense symmetric, one per type block
    diag: np.ndarray  # the scalar variables
    dual: np.ndarray

    @classmethod
    def zero(cls, problem: SdpProblem) -> "SolverSolution":
        return cls(
            0.0,
            [np.zeros((b.order, b.order)) for b in problem.blocks],
            np.zeros(problem.diag_layout()["size"]),
            np.zeros(problem.num_constraints),
        )


class SolutionError(ValueError):
    pass


def write_solution(path, y, blocks, diag) -> None:
    """CSDP-style solution: dual vector line, then ``2 <block> <i> <j> <value>`` primal entries."""
    out = io.StringIO()
    out.write(" ".join(repr(float(v)) for v in y) + "\n")
    for bi, X in enumerate(blocks, start=1):
        n = X.shape[0]
        for i in range(n):
            for j in range(i, n):
                if X[i, j] != 0:
                    out.write(f"2 {bi} {i + 1} {j + 1} {float(X[i, j])!r}\n")
                if X[j, i] != X[i, j] and i != j:
                    # lower entries are written only when they differ
                    out.write(f"2 {bi} {j + 1} {i + 1} {float(X[j, i])!r}\n")
    nb = len(blocks) + 1
    for i, v in enumerate(diag):
        if v != 0:
            out.write(f"2 {nb} {i + 1} {i + 1} {float(v)!r}\n")
    Path(path).write_text(out.getvalue())


def ingest(problem: SdpProblem, path) -> SolverSolution:
    """Read a CSDP solution file (primal entries are those with matrix number 2)."""
    lines = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise SolutionError("empty solution file")
    y = np.array([float(v) for v in lines[0]])
    if len(y) != problem.num_constraints:
        raise SolutionError(f"dual vector has {len(y)} entries, expected {problem.num_constraints}")
    orders = [b.order for b in problem.blocks]
    dsize = problem.diag_layout()["size"]
    blocks = [np.zeros((n, n)) for n in orders]
    seen = [np.zeros((n, n), dtype=bool) for n in orders]
    diag = np.zeros(dsize)
    for tok in lines[1:]:
        if len(tok) != 5:
            raise SolutionError(f"malformed solution line: {' '.join(tok)}")
        mat, bi, i, j = (int(x) for x in tok[:4])
        v = float(tok[4])
        if not math.isfinite(v):
            raise SolutionError("non-finite entry in solution")
        if mat != 2:
            continue
        if bi == len(orders) + 1:
            if i != j or not 1 <= i <= dsize:
                raise SolutionError(f"bad diagonal entry ({i}, {j})")
            diag[i - 1] = v
            continue
        if not 1 <= bi <= len(orders):
            raise SolutionError(f"block {bi} out of range")
        n = orders[bi - 1]
        if not (1 <= i <= n and 1 <= j <= n):
            raise SolutionError(f"entry ({i}, {j}) outside block {bi} of order {n}")
        X, S = blocks[bi - 1], seen[bi - 1]
        X[i - 1, j - 1] = v
        S[i - 1, j - 1] = True
        if not S[j - 1, i - 1] or i == j:
            X[j - 1, i - 1] = v
    for X in blocks:
        if not np.all(np.isfinite(X)):
            raise SolutionError("non-finite entry in solution")
        if X.size and np.max(np.abs(X - X.T)) > ASYMMETRY_TOL:
            raise SolutionError("block matrix is not symmetric")
    lay = problem.diag_layout()
    obj = -diag[lay["lam"]] if problem.mode == "turan" else diag[lay["t"]]
    return SolverSolution(float(obj), [(X + X.T) / 2 for X in blocks], diag, y)
