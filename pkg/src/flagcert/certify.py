"""Exact certificates: rounding floating solutions and verifying them in rationals.

A certificate stores every Gram matrix as a sum of rank-one terms
w v v^T with w > 0, so positive semidefiniteness holds by construction.
Verification recomputes, for each G in F_N,

    alpha_G = sum_j gamma_j side_j(G) + sum_i <A_i, M_i(G)>

where side_j are the averaged kappa inequality vectors and M_i(G) the
coefficients of G in the averaged flag products.  In Turan mode the
certified bound is max_G (p(rho, G) + alpha_G); in sign-pattern mode alpha
must vanish on the exempt family and be negative elsewhere.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce

import numpy as np

from . import flagalg
from .enumeration import TypeGraph, enumerate_admissible
from .sdpgen import (
    KAPPA_KINDS,
    SdpProblem,
    SolverSolution,
    build_block,
    catalog_hash,
    check_parity,
    exempt_family,
)
from .flagalg import FlagVector, catalog_for
from .hypercore import is_isomorphic

log = logging.getLogger(__name__)

EIGEN_THRESHOLD = 1e-7
DEFAULT_DENOMINATOR = 10**4
MAX_DENOMINATOR = 10**7


class CertificateError(ValueError):
    """Malformed certificate text or structure."""


class CatalogMismatch(CertificateError):
    """The certificate was produced against different catalogs."""


@dataclass
class CertBlock:
    sigma: TypeGraph
    size: int  # number of flags
    terms: list = field(default_factory=list)  # [(w, (v_1..v_n))]


@dataclass
class Certificate:
    level: int
    mode: str
    exempt: str
    catalogs: str
    gammas: list = field(default_factory=list)
    blocks: list = field(default_factory=list)
    bound: Fraction | None = None

    def copy(self) -> "Certificate":
        return Certificate(
            self.level, self.mode, self.exempt, self.catalogs, list(self.gammas),
            [CertBlock(b.sigma, b.size, [(w, tuple(v)) for w, v in b.terms]) for b in self.blocks],
            self.bound,
        )

    @property
    def num_terms(self) -> int:
        return sum(len(b.terms) for b in self.blocks)

    def dump(self) -> str:
        head = f"cert level={self.level} mode={self.mode} exempt={self.exempt} catalogs={self.catalogs}"
        if self.bound is not None:
            head += f" bound={_q(self.bound)}"
        lines = [head]
        for j, g in enumerate(self.gammas, start=1):
            lines.append(f"gamma {j} {_q(g)}")
        for blk in self.blocks:
            lines.append(f"block type={blk.sigma.encode()} flags={blk.size}")
            for w, v in blk.terms:
                lines.append(f"term w={_q(w)} v={','.join(_q(x) for x in v)}")
        return "\n".join(lines) + "\n"


def _q(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


_RAT = re.compile(r"-?\d+/[1-9]\d*")


def _parse_q(tok: str) -> Fraction:
    if not _RAT.fullmatch(tok):
        raise CertificateError(f"rational {tok!r} is not of the form p/q")
    p, q = tok.split("/")
    x = Fraction(int(p), int(q))
    if x.numerator != int(p) or x.denominator != int(q):
        raise CertificateError(f"rational {tok!r} is not reduced")
    return x


def _fields(tokens, required) -> dict:
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise CertificateError(f"expected key=value, got {tok!r}")
        k, v = tok.split("=", 1)
        out[k] = v
    missing = [k for k in required if k not in out]
    if missing:
        raise CertificateError(f"missing fields: {', '.join(missing)}")
    return out


def parse_certificate(text: str) -> Certificate:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("cert "):
        raise CertificateError("certificate must start with a 'cert' header")
    head = _fields(lines[0].split()[1:], ("level", "mode", "exempt", "catalogs"))
    if head["mode"] not in ("turan", "signpattern"):
        raise CertificateError(f"unknown mode {head['mode']!r}")
    cert = Certificate(int(head["level"]), head["mode"], head["exempt"], head["catalogs"])
    if "bound" in head:
        cert.bound = _parse_q(head["bound"])
    current = None
    for ln in lines[1:]:
        parts = ln.split()
        if not parts:
            raise CertificateError("blank line inside certificate")
        kind = parts[0]
        if kind == "gamma":
            if current is not None or len(parts) != 3:
                raise CertificateError("gamma lines must precede blocks and have two fields")
            if int(parts[1]) != len(cert.gammas) + 1:
                raise CertificateError("gamma indices must be consecutive from 1")
            cert.gammas.append(_parse_q(parts[2]))
        elif kind == "block":
            f = _fields(parts[1:], ("type", "flags"))
            current = CertBlock(TypeGraph.parse(f["type"]), int(f["flags"]))
            cert.blocks.append(current)
        elif kind == "term":
            if current is None:
                raise CertificateError("term line before any block")
            f = _fields(parts[1:], ("w", "v"))
            v = tuple(_parse_q(t) for t in f["v"].split(","))
            current.terms.append((_parse_q(f["w"]), v))
        else:
            raise CertificateError(f"unknown line kind {kind!r}")
    if cert.dump() != text:
        raise CertificateError("certificate text is not in canonical form")
    return cert


# rounding ------------------------------------------------------------------------


def _rationalize(x: float, bound: int) -> Fraction:
    return Fraction(float(x)).limit_denominator(bound)


def round_solution(solution: SolverSolution, problem: SdpProblem, denominator: int = DEFAULT_DENOMINATOR,
                   threshold: float = EIGEN_THRESHOLD, bound=None) -> Certificate:
    """Eigen-decompose every block and rationalise the kept eigenpairs."""
    if len(solution.blocks) != len(problem.blocks):
        raise ValueError("solution and problem have different block counts")
    blocks = []
    for X, blk in zip(solution.blocks, problem.blocks):
        if X.shape != (blk.order, blk.order):
            raise ValueError("solution block does not match the flag catalog")
        cb = CertBlock(blk.sigma, blk.order)
        if blk.order:
            vals, vecs = np.linalg.eigh((X + X.T) / 2)
            for lam, vec in zip(vals[::-1], vecs.T[::-1]):
                if lam <= threshold:
                    continue
                w = _rationalize(lam, denominator)
                v = tuple(_rationalize(x, denominator) for x in vec)
                if w > 0 and any(v):
                    cb.terms.append((w, v))
        blocks.append(cb)
    lay = problem.diag_layout()
    gammas = []
    for pos in lay["gamma"]:
        g = _rationalize(max(0.0, float(solution.diag[pos])), denominator)
        gammas.append(g)
    return Certificate(problem.level, problem.mode, problem.exempt, problem.catalog_hash(), gammas, blocks,
                       None if bound is None else Fraction(bound))


def claimable_bound(lam: Fraction, digits: int = 10) -> Fraction:
    """The smallest decimal with ``digits`` places that is >= lam."""
    scale = 10**digits
    return Fraction(-((-lam.numerator * scale) // lam.denominator), scale)


def round_and_verify(solution: SolverSolution, problem: SdpProblem, bound=None,
                     denominator: int = DEFAULT_DENOMINATOR, max_denominator: int = MAX_DENOMINATOR):
    """Round with growing denominator bounds until the certificate is accepted.

    In Turan mode without an explicit bound the certificate claims whatever
    bound its exact recomputation gives, so the first rounding succeeds.
    Returns (certificate, report) for the last attempt.
    """
    d = denominator
    while True:
        cert = round_solution(solution, problem, d, bound=bound)
        report = verify(cert)
        if problem.mode == "turan" and bound is None:
            cert.bound = claimable_bound(report.lam)
            report = verify(cert)
        if report.accepted or d >= max_denominator:
            return cert, report
        log.info("rounding at denominator %d rejected; retrying", d)
        d *= 10


# verification -----------------------------------------------------------------------


@dataclass
class VerificationReport:
    accepted: bool
    mode: str
    level: int
    alpha: list  # exact alpha_G over F_N
    margin: Fraction | None
    lam: Fraction | None = None
    witnesses: list = field(default_factory=list)
    reasons: list = field(default_factory=list)
    bound: Fraction | None = None

    @property
    def verdict(self) -> str:
        return "accept" if self.accepted else "reject"

    def lines(self) -> list[str]:
        out = [f"verdict={self.verdict}", f"mode={self.mode}", f"level={self.level}"]
        if self.bound is not None:
            out.append(f"bound={_q(self.bound)}")
            out.append(f"bound_float={float(self.bound):.12g}")
        if self.lam is not None:
            out.append(f"lambda={_q(self.lam)}")
            out.append(f"lambda_float={float(self.lam):.12g}")
        if self.margin is not None:
            out.append(f"margin={_q(self.margin)}")
            out.append(f"margin_float={float(self.margin):.12g}")
        out.append(f"witnesses={','.join(str(w) for w in self.witnesses[:20]) or '-'}")
        for r in self.reasons:
            out.append(f"reason={r}")
        return out


def expected_hash(cert: Certificate) -> str:
    target = enumerate_admissible(cert.level)
    cats = [catalog_for(b.sigma, check_parity(cert.level, b.sigma)) for b in cert.blocks]
    return catalog_hash(target, cats)


def _integer_gram(terms, n: int):
    """Sum of w v v^T as (object integer matrix, common denominator)."""
    if not terms:
        return None, 1
    rows, coefs, dens = [], [], []
    for w, v in terms:
        d = reduce(math.lcm, (x.denominator for x in v), 1)
        rows.append([int(x * d) for x in v])
        coefs.append((w.numerator, w.denominator * d * d))
    Q = reduce(math.lcm, (q for _, q in coefs), 1)
    c = np.array([p * (Q // q) for p, q in coefs], dtype=object)
    U = np.array(rows, dtype=object).reshape(len(rows), n)
    A = U.T.dot(U * c[:, None])
    return A, Q


def block_contributions(blk, terms, n_targets: int) -> list[Fraction]:
    """Exact sum_{f,f'} A[f,f'] M(G)[f,f'] for every G."""
    out = [Fraction(0)] * n_targets
    A, Q = _integer_gram(terms, blk.order)
    if A is None or len(blk.g) == 0:
        return out
    vals = A[blk.f1, blk.f2] * blk.count.astype(object)
    starts = np.flatnonzero(np.r_[True, blk.g[1:] != blk.g[:-1]])
    sums = np.add.reduceat(vals, starts)
    den = Q * blk.denominator
    for gi, s in zip(blk.g[starts].tolist(), sums.tolist()):
        if s:
            out[gi] = Fraction(int(s), den)
    return out


def side_vectors(level: int, count: int) -> list[FlagVector]:
    if count > len(KAPPA_KINDS):
        raise CertificateError(f"at most {len(KAPPA_KINDS)} multipliers are supported")
    return [flagalg.kappa_inequality_vector(1, KAPPA_KINDS[j], level) for j in range(count)]


def compute_alpha(cert: Certificate) -> list[Fraction]:
    target = enumerate_admissible(cert.level)
    alpha = [Fraction(0)] * len(target)
    for gamma, vec in zip(cert.gammas, side_vectors(cert.level, len(cert.gammas))):
        if gamma:
            for g, c in vec.coeffs.items():
                alpha[g] += gamma * c
    for cb in cert.blocks:
        blk = build_block(cb.sigma, target)
        contrib = block_contributions(blk, cb.terms, len(target))
        for g, c in enumerate(contrib):
            if c:
                alpha[g] += c
    return alpha


def _structural_problems(cert: Certificate) -> list[str]:
    bad = []
    for j, g in enumerate(cert.gammas, start=1):
        if g < 0:
            bad.append(f"gamma_{j}_negative")
    for bi, cb in enumerate(cert.blocks, start=1):
        try:
            m = check_parity(cert.level, cb.sigma)
        except ValueError as exc:
            bad.append(f"block_{bi}_parity:{exc}")
            continue
        if cb.size != len(catalog_for(cb.sigma, m)):
            bad.append(f"block_{bi}_flag_count")
        for ti, (w, v) in enumerate(cb.terms, start=1):
            if w <= 0:
                bad.append(f"block_{bi}_term_{ti}_weight_not_positive")
            if len(v) != cb.size:
                bad.append(f"block_{bi}_term_{ti}_length")
    return bad


def verify(cert: Certificate) -> VerificationReport:
    """Recompute every coefficient exactly and check the claimed mode."""
    if cert.mode not in ("turan", "signpattern"):
        raise CertificateError(f"unknown mode {cert.mode!r}")
    want = expected_hash(cert) if not _structural_problems(cert) else None
    if want is not None and want != cert.catalogs:
        raise CatalogMismatch(
            f"catalog hash mismatch: certificate has {cert.catalogs}, local catalogs give {want}"
        )
    problems = _structural_problems(cert)
    if problems:
        return VerificationReport(False, cert.mode, cert.level, [], None, None, [], problems)
    alpha = compute_alpha(cert)
    if cert.mode == "turan":
        if cert.exempt != "-":
            return VerificationReport(False, cert.mode, cert.level, alpha, None, None, [], ["turan_mode_has_no_exempt_family"])
        rho = flagalg.extend(FlagVector.of(flagalg.rho()), cert.level)
        totals = [rho[g] + a for g, a in enumerate(alpha)]
        lam = max(totals)
        reasons, witnesses = [], []
        ok = True
        if cert.bound is not None and lam > cert.bound:
            ok = False
            witnesses = [g for g, t in enumerate(totals) if t > cert.bound]
            reasons.append("bound_exceeded")
        return VerificationReport(ok, cert.mode, cert.level, alpha, lam, lam, witnesses, reasons, cert.bound)
    try:
        exempt = exempt_family(cert.exempt, cert.level)
    except ValueError as exc:
        return VerificationReport(False, cert.mode, cert.level, alpha, None, None, [], [str(exc)])
    nonzero_exempt = [g for g, a in enumerate(alpha) if exempt[g] and a != 0]
    nonneg_free = [g for g, a in enumerate(alpha) if not exempt[g] and a >= 0]
    free = [a for g, a in enumerate(alpha) if not exempt[g]]
    margin = max(free) if free else None
    reasons = []
    if nonzero_exempt:
        reasons.append("exempt_coefficient_nonzero")
    if nonneg_free:
        reasons.append("free_coefficient_not_negative")
    ok = not reasons
    return VerificationReport(ok, cert.mode, cert.level, alpha, margin, None, nonzero_exempt + nonneg_free, reasons)


# consequences --------------------------------------------------------------------


@dataclass
class CorollaryReport:
    hypergraph: str
    certificate_accepted: bool
    absent_from_exempt: bool
    offending: list
    is_butterfly: bool

    @property
    def density_forced_zero(self) -> bool:
        return self.certificate_accepted and self.absent_from_exempt

    def lines(self) -> list[str]:
        return [
            f"hypergraph={self.hypergraph}",
            f"certificate_accepted={str(self.certificate_accepted).lower()}",
            f"absent_from_exempt={str(self.absent_from_exempt).lower()}",
            f"offending={','.join(map(str, self.offending[:20])) or '-'}",
            f"is_butterfly={str(self.is_butterfly).lower()}",
            f"density_forced_zero={str(self.density_forced_zero).lower()}",
        ]


def induced_in_family(F, level: int, exempt: str) -> list[int]:
    """Indices of exempt level-N members that contain F as an induced subgraph."""
    if F.n > level:
        raise ValueError("hypergraph larger than the certificate level")
    mask = exempt_family(exempt, level)
    src = enumerate_admissible(F.n)
    table = flagalg.density_table(src, enumerate_admissible(level))
    row = table.counts[FlagVector.of(F).support()[0]]
    return [int(g) for g in np.flatnonzero((row > 0) & mask)]


def corollary_check(cert, F, report: VerificationReport | None = None) -> CorollaryReport:
    """Whether an accepted sign-pattern certificate forces the density of F to vanish.

    phi(sum alpha_G G) >= 0 with alpha_G < 0 off the exempt family forces
    phi(G) = 0 for every non-exempt G; if no exempt member contains F
    induced then p(F) = sum_G p(F, G) phi(G) = 0.
    """
    if report is None and cert is not None:
        report = verify(cert)
    accepted = bool(report and report.accepted and report.mode == "signpattern")
    level = cert.level if cert is not None else 7
    exempt = cert.exempt if cert is not None else f"E{level}"
    offending = induced_in_family(F, level, exempt)
    return CorollaryReport(
        str(F), accepted, not offending, offending,
        F.n == 5 and is_isomorphic(F, flagalg.butterfly()),
    )
