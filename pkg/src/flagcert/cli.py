"""Command-line interface.

stdout carries key=value lines only; progress and prose go to stderr.
Exit codes: 0 success or accept, 1 reject or property violated, 2 usage,
3 resource bound exceeded.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import platform
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import __version__

log = logging.getLogger("flagcert")

EXIT_OK, EXIT_REJECT, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3


class RunManifest:
    """Audit record of one invocation."""

    def __init__(self, argv):
        self.data = {
            "command": list(argv),
            "version": __version__,
            "python": platform.python_version(),
            "catalogs": {},
            "seeds": {},
            "outputs": {},
        }
        self._start = time.time()

    def catalog(self, name, digest):
        self.data["catalogs"][name] = digest

    def seed(self, name, value):
        self.data["seeds"][name] = value

    def output(self, path):
        p = Path(path)
        self.data["outputs"][str(p)] = hashlib.sha256(p.read_bytes()).hexdigest()

    def finish(self, code, target):
        import numpy

        self.data["numpy"] = numpy.__version__
        self.data["exit_code"] = code
        self.data["wall_clock_s"] = round(time.time() - self._start, 3)
        text = json.dumps(self.data, indent=1, sort_keys=True)
        if target:
            Path(target).write_text(text + "\n")
        else:
            print(text, file=sys.stderr)


def emit(**pairs):
    for k, v in pairs.items():
        print(f"{k}={v}")


def _read_text(src) -> str:
    if src in (None, "-"):
        return sys.stdin.read()
    return Path(src).read_text()


def _write_text(path, text, manifest):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    Path(path).write_text(text)
    manifest.output(path)


def _fraction(text) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from exc


# commands ---------------------------------------------------------------------------


def cmd_enum(args, man):
    from .enumeration import enumerate_admissible, enumerate_realizable

    if args.realizable:
        if args.r != 3:
            raise SystemExit("--realizable is only defined for r=3")
        cat = enumerate_realizable(args.n)
    else:
        cat = enumerate_admissible(args.n, args.r)
    man.catalog(f"{cat.family}{args.n}", cat.digest)
    if args.out:
        Path(args.out).write_text(cat.dump())
        man.output(args.out)
    emit(family=cat.family, n=args.n, r=args.r, count=len(cat), digest=cat.digest)
    return EXIT_OK


def cmd_types(args, man):
    from .enumeration import enumerate_types
    from .flagalg import catalog_for

    for i, t in enumerate(enumerate_types(args.k, args.r)):
        line = f"index={i} type={t.encode()}"
        if args.size is not None:
            line += f" flags={len(catalog_for(t, args.size))}"
        print(line)
    return EXIT_OK


def cmd_flags(args, man):
    from .enumeration import type_by_name
    from .flagalg import catalog_for

    sigma = type_by_name(args.type)
    cat = catalog_for(sigma, args.size)
    man.catalog(f"flags:{sigma.encode()}:{args.size}", cat.digest)
    if args.out:
        Path(args.out).write_text(cat.dump())
        man.output(args.out)
    emit(type=sigma.encode(), size=args.size, count=len(cat), digest=cat.digest)
    return EXIT_OK


def _parse_types(choice, level):
    from .enumeration import type_by_name
    from .sdpgen import default_types, signpattern_types

    if choice in (None, "default"):
        return default_types(level)
    if choice == "signpattern":
        return signpattern_types()
    if choice == "none":
        return []
    return [type_by_name(tok) for tok in choice.split("/")]


def _problem_from_manifest(sdpa_path):
    from .enumeration import TypeGraph
    from .sdpgen import assemble, kappa_side_constraints

    meta = json.loads(Path(str(sdpa_path) + ".manifest").read_text())
    types = [TypeGraph.parse(t) for t in meta["types"]]
    kinds = [name.split("_", 1)[1] for name in meta["side"]]
    side = kappa_side_constraints(meta["level"], kinds) if kinds else []
    problem = assemble(meta["level"], meta["mode"], types, side, meta["exempt"] if meta["mode"] != "turan" else None)
    if problem.catalog_hash() != meta["catalogs"]:
        raise ValueError("local catalogs differ from the ones recorded in the manifest")
    return problem


def cmd_sdp_build(args, man):
    from .sdpgen import assemble, emit as emit_sdpa, kappa_side_constraints

    mode = "turan" if args.objective in ("edge", "turan") else "signpattern"
    types = _parse_types(args.types, args.level)
    side = kappa_side_constraints(args.level) if args.kappas else []
    problem = assemble(args.level, mode, types, side, args.exempt)
    path = emit_sdpa(problem, args.out)
    man.output(path)
    man.output(str(path) + ".manifest")
    man.catalog("problem", problem.catalog_hash())
    emit(level=args.level, mode=mode, constraints=problem.num_constraints,
         blocks=",".join(str(b.order) for b in problem.blocks) or "-",
         types=",".join(t.encode() for t in problem.types) or "-",
         side=len(side), out=path, catalogs=problem.catalog_hash())
    return EXIT_OK


def cmd_sdp_solve(args, man):
    from .solver import solve_sdpa

    info = solve_sdpa(args.problem, args.out, solver=args.solver)
    man.output(args.out)
    emit(status=info["status"], objective=f"{info['objective']:.12g}", solver=info["solver"], out=args.out)
    return EXIT_OK


def cmd_sdp_ingest(args, man):
    from .sdpgen import ingest

    problem = _problem_from_manifest(args.problem)
    sol = ingest(problem, args.solution)
    emit(objective=f"{sol.objective:.12g}", blocks=",".join(str(b.shape[0]) for b in sol.blocks) or "-",
         constraints=len(sol.dual))
    return EXIT_OK


def cmd_sdp_round(args, man):
    from .certify import round_and_verify
    from .sdpgen import ingest

    problem = _problem_from_manifest(args.problem)
    sol = ingest(problem, args.solution)
    cert, report = round_and_verify(sol, problem, bound=args.bound, denominator=args.denominator)
    Path(args.out).write_text(cert.dump())
    man.output(args.out)
    man.catalog("certificate", cert.catalogs)
    for line in report.lines():
        print(line)
    emit(terms=cert.num_terms, out=args.out)
    return EXIT_OK if report.accepted else EXIT_REJECT


def cmd_verify(args, man):
    from .certify import corollary_check, parse_certificate, verify
    from .flagalg import butterfly

    cert = parse_certificate(Path(args.cert).read_text())
    man.catalog("certificate", cert.catalogs)
    report = verify(cert)
    lines = report.lines()
    for line in lines:
        print(line)
    if args.report:
        from .plotting import plot_coefficients
        from .sdpgen import exempt_family

        out = Path(args.report)
        out.mkdir(parents=True, exist_ok=True)
        extra = []
        if cert.level >= 5:
            cor = corollary_check(cert, butterfly(), report)
            extra = [f"corollary_{ln}" for ln in cor.lines()]
            for ln in extra:
                print(ln)
        (out / "report.txt").write_text("\n".join(lines + extra) + "\n")
        man.output(out / "report.txt")
        if report.alpha:
            ex = exempt_family(cert.exempt, cert.level) if cert.mode == "signpattern" else None
            fig = plot_coefficients(report, out / "coefficients.png", ex)
            man.output(fig)
            emit(figure=fig)
    return EXIT_OK if report.accepted else EXIT_REJECT


def cmd_construct(args, man):
    from .constructions import random_simplex_system, random_tournament, simplex_hypergraph, tournament_hypergraph
    from .hypercore import format_hypergraph

    man.seed("construct", args.seed)
    if args.kind == "tournament":
        H = tournament_hypergraph(random_tournament(args.n, args.seed))
        head = f"# seed={args.seed}, model=tournament, n={args.n}"
    else:
        H = simplex_hypergraph(random_simplex_system(args.n, args.r, args.seed))
        head = f"# seed={args.seed}, model=simplex, n={args.n}, r={args.r}"
    _write_text(args.out, head + "\n" + format_hypergraph(H) + "\n", man)
    if args.out not in (None, "-"):
        emit(n=H.n, r=H.r, edges=H.num_edges, out=args.out)
    return EXIT_OK


def cmd_check(args, man):
    from .flagalg import contains_butterfly
    from .hypercore import contains_forbidden, read_hypergraphs

    graphs = read_hypergraphs(_read_text(args.input))
    bad = 0
    for i, H in enumerate(graphs):
        if args.butterfly:
            hit = contains_butterfly(H)
        else:
            hit = contains_forbidden(H, args.pattern)
        bad += hit
        print(f"index={i} result={'contains' if hit else 'free'}")
    pattern = "butterfly" if args.butterfly else args.pattern
    emit(pattern=pattern, checked=len(graphs), containing=bad, result="contains" if bad else "free")
    return EXIT_REJECT if bad else EXIT_OK


def cmd_sparsify(args, man):
    from .constructions import sparsify
    from .hypercore import format_hypergraph, read_hypergraphs

    man.seed("sparsify", args.seed)
    out = [f"# seed={args.seed}, model=sparsify, keep={args.keep}"]
    for H in read_hypergraphs(_read_text(args.input)):
        out.append(format_hypergraph(sparsify(H, args.keep, args.seed)))
    _write_text(args.out, "\n".join(out) + "\n", man)
    return EXIT_OK


def cmd_profile(args, man):
    from .constructions import density_profile
    from .hypercore import read_hypergraphs

    graphs = read_hypergraphs(_read_text(args.input))
    if len(graphs) != 1:
        raise SystemExit("profile expects exactly one hypergraph")
    man.seed("profile", args.seed)
    rows = density_profile(graphs[0], args.deltas, exact_bound=args.exact_bound, seed=args.seed)
    for row in rows:
        print(row.line())
    if args.plot:
        from .plotting import plot_density_profile

        fig = plot_density_profile(rows, args.plot)
        man.output(fig)
        emit(figure=fig)
    return EXIT_OK


def cmd_kappa(args, man):
    from .flagalg import build_kappa, cauchy_schwarz_edge_bound

    for kind in ("edge", "nonedge"):
        k, kp = build_kappa(kind)
        emit(flag=kind, kappa_support=len(k.coeffs), kappa_plus_support=len(kp.coeffs))
    for line in cauchy_schwarz_edge_bound().lines():
        print(line)
    return EXIT_OK


# parser ---------------------------------------------------------------------------------


def _global_options(p, default):
    p.add_argument("--manifest", default=default, help="write the run manifest here (default: stderr)")
    p.add_argument("--jobs", type=int, default=default, help="cap on worker threads")
    p.add_argument("-v", "--verbose", action="store_true", default=default if default else False)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="flagcert", description="Flag-algebra certificates for 3-graphs.")
    _global_options(p, None)
    # the same options are accepted after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    _global_options(common, argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True)
    _add = sub.add_parser

    def add_parser(name, **kw):
        return _add(name, parents=[common], **kw)

    sub.add_parser = add_parser

    e = sub.add_parser("enum", help="count admissible or realizable hypergraphs")
    e.add_argument("--n", type=int, required=True)
    e.add_argument("--r", type=int, default=3)
    e.add_argument("--realizable", action="store_true")
    e.add_argument("--out")
    e.set_defaults(func=cmd_enum)

    t = sub.add_parser("types", help="list types of a given size")
    t.add_argument("--k", type=int, required=True)
    t.add_argument("--r", type=int, default=3)
    t.add_argument("--size", type=int, help="also count flags of this size")
    t.set_defaults(func=cmd_types)

    f = sub.add_parser("flags", help="enumerate flags over a type")
    f.add_argument("--type", required=True, help="name (0, 1, 2, 3e0, 3e1) or encoding k:edges")
    f.add_argument("--size", type=int, required=True)
    f.add_argument("--out")
    f.set_defaults(func=cmd_flags)

    s = sub.add_parser("sdp", help="build, solve, ingest and round semidefinite programs")
    ss = s.add_subparsers(dest="sdp_command", required=True)
    _add_sdp = ss.add_parser
    ss.add_parser = lambda name, **kw: _add_sdp(name, parents=[common], **kw)
    b = ss.add_parser("build")
    b.add_argument("--level", type=int, required=True)
    b.add_argument("--objective", choices=("edge", "turan", "signpattern"), default="edge")
    b.add_argument("--types", help="default, signpattern (the eight level-7 types), none, or names joined by '/'")
    b.add_argument("--kappas", action="store_true", help="attach both kappa side constraints")
    b.add_argument("--exempt", help="exempt family in sign-pattern mode (E<N>, F<N> or -)")
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_sdp_build)
    so = ss.add_parser("solve", help="solve an SDPA file with cvxpy")
    so.add_argument("problem")
    so.add_argument("--out", required=True)
    so.add_argument("--solver", default="CLARABEL")
    so.set_defaults(func=cmd_sdp_solve)
    ig = ss.add_parser("ingest")
    ig.add_argument("problem")
    ig.add_argument("solution")
    ig.set_defaults(func=cmd_sdp_ingest)
    rd = ss.add_parser("round")
    rd.add_argument("problem")
    rd.add_argument("solution")
    rd.add_argument("--out", required=True)
    rd.add_argument("--bound", type=_fraction)
    rd.add_argument("--denominator", type=int, default=10**4)
    rd.set_defaults(func=cmd_sdp_round)

    v = sub.add_parser("verify", help="exactly verify a certificate")
    v.add_argument("--cert", required=True)
    v.add_argument("--report", help="directory for report.txt and figures")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("construct", help="sample a construction")
    c.add_argument("kind", choices=("tournament", "simplex"))
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--r", type=int, default=3)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out")
    c.set_defaults(func=cmd_construct)

    ch = sub.add_parser("check", help="test hypergraphs for a forbidden pattern")
    ch.add_argument("input", nargs="?", default="-")
    grp = ch.add_mutually_exclusive_group(required=True)
    grp.add_argument("--k4minus", dest="pattern", action="store_const", const="K4minus")
    grp.add_argument("--k4", dest="pattern", action="store_const", const="K4")
    grp.add_argument("--clique", dest="pattern", action="store_const", const="Kr+1_3")
    grp.add_argument("--butterfly", action="store_true")
    ch.set_defaults(func=cmd_check)

    sp = sub.add_parser("sparsify", help="keep each edge with a fixed probability")
    sp.add_argument("input", nargs="?", default="-")
    sp.add_argument("--keep", type=_fraction, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_sparsify)

    pr = sub.add_parser("profile", help="delta-linear density profile")
    pr.add_argument("input", nargs="?", default="-")
    pr.add_argument("--deltas", type=lambda s: [_fraction(x) for x in s.split(",")], default="1/4,1/2,3/4,1")
    pr.add_argument("--exact-bound", type=int, default=22)
    pr.add_argument("--seed", type=int, default=0)
    pr.add_argument("--plot", help="write the profile figure here")
    pr.set_defaults(func=cmd_profile)

    k = sub.add_parser("kappa", help="report the kappa expressions and the butterfly bound")
    k.set_defaults(func=cmd_kappa)
    return p


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.jobs:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.jobs)
    man = RunManifest(["flagcert"] + argv)
    from .hypercore import CanonicalizationBoundError, ResourceBoundError

    try:
        code = args.func(args, man)
    except (ResourceBoundError, CanonicalizationBoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_RESOURCE
    except SystemExit as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_REJECT if args.command == "verify" else EXIT_USAGE
    man.finish(code, args.manifest)
    return code


if __name__ == "__main__":
    sys.exit(main())
