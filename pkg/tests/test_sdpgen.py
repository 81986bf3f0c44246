import json
from fractions import Fraction

import numpy as np
import pytest

from flagcert import flagalg as fa
from flagcert import sdpgen
from flagcert.enumeration import enumerate_admissible, enumerate_realizable, pair_type, type_by_name, vertex_type
from flagcert.flagalg import FlagVector, catalog_for
from flagcert.sdpgen import ParityError, SolutionError

import oracles


def test_parity_checks():
    assert sdpgen.check_parity(5, vertex_type()) == 3
    assert sdpgen.check_parity(7, type_by_name("3e1")) == 5
    with pytest.raises(ParityError):
        sdpgen.check_parity(6, vertex_type())
    with pytest.raises(ParityError):
        sdpgen.assemble(5, types=[pair_type()])
    with pytest.raises(ValueError):
        sdpgen.assemble(8)
    with pytest.raises(ValueError):
        sdpgen.assemble(5, objective="maxcut")


def test_default_types():
    assert [t.encode() for t in sdpgen.default_types(5)] == ["1:-", "3:-", "3:0,1,2"]
    assert [t.size for t in sdpgen.default_types(6)] == [0, 2, 4, 4, 4]
    # level 7 would need 7-vertex flags over a single vertex and an empty type is impossible
    assert all(t.size % 2 == 1 for t in sdpgen.default_types(7))


def test_signpattern_type_sizes():
    sizes = [len(catalog_for(t, sdpgen.check_parity(7, t))) for t in sdpgen.signpattern_types()]
    assert sizes == [5, 95, 47, 191, 135, 95, 101, 148]


@pytest.mark.parametrize("name,N", [("1", 5), ("3e1", 5), ("2", 6), ("0", 6)])
def test_block_sums_to_embedding_probability(name, N):
    sigma = type_by_name(name)
    target = enumerate_admissible(N)
    blk = sdpgen.build_block(sigma, target)
    per_g = np.bincount(blk.g, weights=blk.count, minlength=len(target))
    for gi, G in enumerate(target):
        emb = oracles.embeddings(G.edges, N, list(sigma.graph.edges), sigma.size) if sigma.size else 1
        assert Fraction(int(per_g[gi]), blk.denominator) == Fraction(emb, oracles.falling(N, sigma.size))


def test_block_entries_match_brute_force():
    sigma = vertex_type()
    target = enumerate_admissible(5)
    blk = sdpgen.build_block(sigma, target)
    codes = [oracles.canon(H.edges, 3, 1) for H in blk.flags]
    for gi, G in enumerate(target):
        want = oracles.averaged_pair_distribution(G.edges, 5, [], 1, 3)
        M = blk.matrix(gi)
        got = {(codes[a], codes[b]): M[a][b] for a in range(blk.order) for b in range(blk.order) if M[a][b]}
        assert got == want


def test_blocks_are_symmetric():
    blk = sdpgen.build_block(type_by_name("3e0"), enumerate_admissible(5))
    mass = blk.total_mass()
    assert np.array_equal(mass, mass.T)
    for gi in range(0, 11, 3):
        M = blk.matrix(gi)
        assert all(M[a][b] == M[b][a] for a in range(blk.order) for b in range(blk.order))


def test_decimal_strings():
    assert sdpgen.decimal_string(Fraction(0)) == "0"
    assert sdpgen.decimal_string(Fraction(-1)) == "-1"
    assert sdpgen.decimal_string(Fraction(1, 4)) == "0.25"
    third = sdpgen.decimal_string(Fraction(1, 3))
    assert third == "0." + "3" * 30
    assert Fraction(third) != Fraction(1, 3)


def test_emission_is_deterministic_and_exact(tmp_path):
    problem = sdpgen.assemble(5, "turan", [vertex_type()], sdpgen.kappa_side_constraints(5))
    a = sdpgen.emit(problem, tmp_path / "a.sdpa")
    b = sdpgen.emit(sdpgen.assemble(5, "turan", [vertex_type()], sdpgen.kappa_side_constraints(5)), tmp_path / "b.sdpa")
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.sdpa.manifest").read_bytes() == (tmp_path / "b.sdpa.manifest").read_bytes()
    meta = json.loads((tmp_path / "a.sdpa.manifest").read_text())
    assert meta["catalogs"] == problem.catalog_hash()
    assert meta["block_orders"] == [len(catalog_for(vertex_type(), 3))]
    assert meta["side"] == ["kappa_edge", "kappa_nonedge"]
    # every printed decimal maps back to exactly one rational, and all entries appear
    sd = sdpgen.read_sdpa(a)
    exact = {k: Fraction(v) for k, v in meta["values"].items()}
    for line in a.read_text().splitlines()[5:]:
        assert line.split()[4] in exact
    assert sd.m == 11 and sd.sizes == [problem.blocks[0].order, -(1 + 2 + 11)]
    rho = fa.extend(FlagVector.of(fa.rho()), 5)
    assert np.allclose(sd.b, [-float(rho[g]) for g in range(11)])


def test_empty_side_constraints_layout():
    problem = sdpgen.assemble(5, "turan", [vertex_type()])
    lay = problem.diag_layout()
    assert lay["gamma"] == [] and lay["slack_start"] == 1 and lay["size"] == 12


def test_side_constraint_validation():
    bad = sdpgen.SideConstraint("x", FlagVector.of(fa.rho()))
    with pytest.raises(ValueError):
        sdpgen.assemble(5, "turan", [], [bad])


def test_signpattern_layout_and_rows():
    problem = sdpgen.assemble(5, "signpattern", [vertex_type()], exempt="E5")
    lay = problem.diag_layout()
    E = enumerate_realizable(5)
    assert int(problem.exempt_mask.sum()) == len(E)
    assert lay["size"] == 2 + 11 - len(E)
    assert sdpgen.rhs(problem) == [0] * 11 + [1]
    t_rows = {k for k, bi, a, b, v in sdpgen._entries(problem) if bi == 2 and a == lay["t"] + 1 and k > 0}
    free_rows = {g + 1 for g in range(11) if not problem.exempt_mask[g]}
    assert t_rows == free_rows | {12}
    with pytest.raises(ValueError):
        sdpgen.exempt_family("Q5", 5)
    assert sdpgen.exempt_family("F5", 5).all() and not sdpgen.exempt_family("-", 5).any()


def _independent_turan_bound(N, types):
    """Solve min lam s.t. lam >= p(rho,G) + sum <X, M(G)> with M from multiply + average."""
    import cvxpy as cp

    target = enumerate_admissible(N)
    rho = fa.extend(FlagVector.of(fa.rho()), N)
    expr = [float(rho[g]) for g in range(len(target))]
    cons = []
    for sigma in types:
        m = sdpgen.check_parity(N, sigma)
        C = catalog_for(sigma, m)
        X = cp.Variable((len(C), len(C)), PSD=True)
        cons.append(X >> 0)
        mats = [np.zeros((len(C), len(C))) for _ in target]
        for i in range(len(C)):
            for j in range(len(C)):
                v = fa.average(fa.multiply(FlagVector.basis(C, i), FlagVector.basis(C, j)))
                for g, c in v.coeffs.items():
                    mats[g][i, j] = float(c)
        expr = [e + cp.trace(X @ M) for e, M in zip(expr, mats)]
    lam = cp.Variable()
    prob = cp.Problem(cp.Minimize(lam), cons + [lam >= e for e in expr])
    prob.solve(solver="CLARABEL")
    return prob.value


def test_turan5_matches_independent_formulation(turan5):
    types = [vertex_type(), type_by_name("3e1")]
    ref = _independent_turan_bound(5, types)
    assert abs(turan5["info"]["objective"] + ref) < 1e-6
    assert abs(turan5["solution"].objective + ref) < 1e-6
    # the optimum at this level is 5/11
    assert abs(ref - 5 / 11) < 1e-6


def test_no_types_baseline(tmp_path):
    from flagcert import solver

    problem = sdpgen.assemble(5, "turan", [])
    path = sdpgen.emit(problem, tmp_path / "p.sdpa")
    info = solver.solve_sdpa(path, tmp_path / "p.sol")
    rho = fa.extend(FlagVector.of(fa.rho()), 5)
    assert max(rho.dense()) == Fraction(1, 2)
    assert abs(-info["objective"] - 0.5) < 1e-7


def test_ingest_roundtrip_and_rejections(tmp_path):
    problem = sdpgen.assemble(5, "turan", [vertex_type()])
    zero = sdpgen.SolverSolution.zero(problem)
    rng = np.random.default_rng(0)
    n = problem.blocks[0].order
    A = rng.normal(size=(n, n))
    X = A @ A.T
    diag = np.arange(zero.diag.size, dtype=float)
    sdpgen.write_solution(tmp_path / "s", np.ones(11), [X], diag)
    sol = sdpgen.ingest(problem, tmp_path / "s")
    assert np.allclose(sol.blocks[0], X) and sol.objective == -0.0
    assert np.array_equal(sol.diag, diag)

    text = (tmp_path / "s").read_text().splitlines()
    bad = tmp_path / "bad"
    bad.write_text("\n".join(text[:1] + ["2 1 1 2 1.0", "2 1 2 1 5.0"]) + "\n")
    with pytest.raises(SolutionError):
        sdpgen.ingest(problem, bad)
    bad.write_text("1 1\n")
    with pytest.raises(SolutionError):
        sdpgen.ingest(problem, bad)
    bad.write_text(text[0] + "\n2 3 1 1 1.0\n")
    with pytest.raises(SolutionError):
        sdpgen.ingest(problem, bad)
    bad.write_text(text[0] + "\n2 1 1 9 1.0\n")
    with pytest.raises(SolutionError):
        sdpgen.ingest(problem, bad)
    bad.write_text(text[0] + "\n2 1 1 1 nan\n")
    with pytest.raises(SolutionError):
        sdpgen.ingest(problem, bad)
    bad.write_text("")
    with pytest.raises(SolutionError):
        sdpgen.ingest(problem, bad)


@pytest.mark.parametrize("name,N", [("1", 5), ("3e1", 5), ("2", 6)])
def test_block_mass_equals_averaged_product_mass(name, N):
    sigma = type_by_name(name)
    blk = sdpgen.build_block(sigma, enumerate_admissible(N))
    mass = blk.total_mass()
    C = blk.flags
    for i in range(len(C)):
        for j in range(len(C)):
            avg = fa.average(fa.multiply(FlagVector.basis(C, i), FlagVector.basis(C, j)))
            assert Fraction(int(mass[i, j]), blk.denominator) == sum(avg.coeffs.values(), Fraction(0))
