import itertools
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flagcert import flagalg as fa
from flagcert.enumeration import Flag, enumerate_admissible, enumerate_realizable, enumerate_types, pair_type, type_by_name, vertex_type
from flagcert.flagalg import FlagVector, catalog_for
from flagcert.hypercore import Hypergraph, canonical_code

import oracles


def test_density_examples():
    edge = fa.rho()
    two = Hypergraph(4, ((0, 1, 2), (0, 1, 3)))
    assert fa.density(edge, two) == Fraction(1, 2)
    assert fa.density(two, two) == 1
    assert fa.density(two, edge) == 0
    with pytest.raises(ValueError):
        fa.density(Flag(edge, (0,), vertex_type()), two)


def test_density_table_matches_direct_density():
    src, dst = enumerate_admissible(4), enumerate_admissible(6)
    table = fa.density_table(src, dst)
    for i, H in enumerate(src):
        for j, G in enumerate(dst):
            assert table.value(i, j) == fa.density(H, G)


def test_density_table_matches_oracle_for_flags():
    sigma = pair_type()
    src, dst = catalog_for(sigma, 4), catalog_for(sigma, 5)
    table = fa.density_table(src, dst)
    for i, H in enumerate(src):
        for j, G in enumerate(dst):
            assert table.value(i, j) == oracles.density(H.edges, 4, G.edges, 5, fixed=2)


def test_table_text_roundtrip():
    t = fa.density_table(enumerate_admissible(3), enumerate_admissible(5))
    text = t.dump()
    assert text.splitlines()[0] == "table p src=3 dst=5"
    assert fa.parse_table(text, t.src, t.dst).dump() == text
    with pytest.raises(ValueError):
        fa.parse_table(text.replace("1/1", "2/2", 1), t.src, t.dst)


@pytest.mark.parametrize("l", [3, 4, 5])
def test_chain_rule(l):
    a, b, c = enumerate_admissible(l), enumerate_admissible(l + 1), enumerate_admissible(l + 2)
    direct = fa.density_table(a, c)
    step1, step2 = fa.density_table(a, b), fa.density_table(b, c)
    via = step1.counts.astype(object).dot(step2.counts.astype(object))
    for i in range(len(a)):
        for j in range(len(c)):
            assert Fraction(int(via[i, j]), step1.denominator * step2.denominator) == direct.value(i, j)


@pytest.mark.parametrize("l,L", [(3, 4), (3, 6), (4, 7), (5, 7)])
def test_partition_of_unity(l, L):
    t = fa.density_table(enumerate_admissible(l), enumerate_admissible(L))
    assert np.all(t.counts.sum(axis=0) == t.denominator)


def test_extend_examples():
    F3 = enumerate_admissible(3)
    ones = FlagVector(F3, {i: 1 for i in range(len(F3))})
    ext = fa.extend(ones, 5)
    assert set(ext.coeffs.values()) == {1} and len(ext.coeffs) == 11
    edge = FlagVector.of(fa.rho())
    assert fa.extend(fa.extend(edge)) == fa.extend(edge, 5)
    assert edge == fa.extend(edge, 6)


def _brute_product_distribution(sigma, n1, n2):
    L = n1 + n2 - sigma.size
    target = catalog_for(sigma, L)
    out = []
    for H in target:
        out.append(oracles.split_distribution(H.edges, L, sigma.size, n1))
    return out


def _product_cases(max_size):
    for s in range(0, 5):
        for sigma in enumerate_types(s):
            for n1 in range(s, max_size + 1):
                for n2 in range(n1, max_size + 1):
                    if n1 + n2 - s <= max_size and (n1 > s or n2 > s):
                        yield sigma, n1, n2


def check_products_against_oracle(max_size):
    checked = 0
    for sigma, n1, n2 in _product_cases(max_size):
        table = fa.split_density_table(sigma, n1, n2)
        left, right = table.left, table.right
        lcode = [oracles.canon(H.edges, n1, sigma.size) for H in left]
        rcode = [oracles.canon(H.edges, n2, sigma.size) for H in right]
        brute = _brute_product_distribution(sigma, n1, n2)
        got = [dict() for _ in brute]
        for h, i, j, c in zip(table.h.tolist(), table.i1.tolist(), table.i2.tolist(), table.count.tolist()):
            got[h][(lcode[i], rcode[j])] = Fraction(c, table.denominator)
        assert got == brute, (sigma, n1, n2)
        checked += len(brute)
    return checked


def test_products_match_brute_force_up_to_five():
    assert check_products_against_oracle(5) > 0


def test_split_partition_and_symmetry():
    sigma = type_by_name("1")
    t = fa.split_density_table(sigma, 3, 4)
    sums = np.zeros(len(t.target), dtype=np.int64)
    np.add.at(sums, t.h, t.count)
    assert np.all(sums == t.denominator)
    sym = fa.split_density_table(sigma, 4, 3)
    a = {(h, i, j): c for h, i, j, c in zip(t.h, t.i1, t.i2, t.count)}
    b = {(h, j, i): c for h, i, j, c in zip(sym.h, sym.i1, sym.i2, sym.count)}
    assert a == b


def test_unit_flag_is_identity():
    sigma = pair_type()
    unit = FlagVector.basis(catalog_for(sigma, 2), 0)
    F = fa.rooted_pair_flag("edge")
    assert fa.multiply(unit, F) == F
    assert fa.multiply(F, unit) == F


def test_multiply_checks_size_and_type():
    a = FlagVector.basis(catalog_for(vertex_type(), 4), 0)
    with pytest.raises(ValueError):
        fa.multiply(a, FlagVector.basis(catalog_for(vertex_type(), 5), 0))
    with pytest.raises(ValueError):
        fa.multiply(a, fa.rooted_pair_flag("edge"))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 4), st.integers(0, 4), st.integers(0, 10**6))
def test_product_evaluated_on_seven_vertex_flags(i, j, seed):
    # evaluate a*b on a size-7 flag two ways: through the product basis and
    # by drawing disjoint witness sets inside the flag directly
    sigma = vertex_type()
    c3 = catalog_for(sigma, 3)
    a = FlagVector.basis(c3, i % len(c3))
    b = FlagVector.basis(c3, j % len(c3))
    prod = fa.multiply(a, b)
    big = catalog_for(sigma, 7)
    g = random.Random(seed).randrange(len(big))
    G = big.hypergraph(g)
    via = fa.extend(prod, 7)[g]
    A_code = oracles.canon(c3.hypergraph(i % len(c3)).edges, 3, 1)
    B_code = oracles.canon(c3.hypergraph(j % len(c3)).edges, 3, 1)
    hits = total = 0
    for X in itertools.combinations(range(1, 7), 2):
        rest = [v for v in range(1, 7) if v not in X]
        for Y in itertools.combinations(rest, 2):
            total += 1
            hits += (oracles.canon(oracles.induced(G.edges, [0, *X]), 3, 1) == A_code
                     and oracles.canon(oracles.induced(G.edges, [0, *Y]), 3, 1) == B_code)
    assert via == Fraction(hits, total)


def test_average_examples():
    assert fa.average(fa.rho_rooted()) == FlagVector.of(fa.rho())
    zero = FlagVector(catalog_for(pair_type(), 4), {})
    assert fa.average(zero).coeffs == {}


@pytest.mark.parametrize("name", ["1", "2", "3e0", "3e1"])
def test_averaging_factors_match_oracle(name):
    sigma = type_by_name(name)
    size = sigma.size + 2
    fac = fa.averaging_factors(sigma, size)
    assert np.all(fac.counts > 0)
    for i, H in enumerate(fac.flags):
        G = fac.unlabelled.hypergraph(int(fac.owner[i]))
        want = oracles.canon(H.edges, size, sigma.size)
        hits = 0
        for th in itertools.permutations(range(size), sigma.size):
            rest = [v for v in range(size) if v not in th]
            hits += oracles.canon(oracles.induced(G.edges, list(th) + rest), size, sigma.size) == want
        assert fac.p(i) == Fraction(hits, oracles.falling(size, sigma.size))
        assert 0 < fac.p(i) <= 1


def test_unit_flag_average():
    for s in range(1, 4):
        for sigma in enumerate_types(s):
            fac = fa.averaging_factors(sigma, s)
            G = fac.unlabelled.hypergraph(int(fac.owner[0]))
            emb = oracles.embeddings(G.edges, s, list(sigma.graph.edges), s)
            assert fac.p(0) == Fraction(emb, oracles.falling(s, s))


def test_averaged_product_counts_match_multiply_then_average():
    sigma = type_by_name("3e1")
    target = enumerate_admissible(5)
    g, f1, f2, c, den = fa.averaged_product_counts(sigma, 4, 4, target)
    C = catalog_for(sigma, 4)
    for i in range(len(C)):
        for j in range(len(C)):
            ref = fa.average(fa.multiply(FlagVector.basis(C, i), FlagVector.basis(C, j)))
            m = (f1 == i) & (f2 == j)
            got = {int(x): Fraction(int(y), den) for x, y in zip(g[m], c[m])}
            assert got == ref.coeffs


def test_kappa_structure():
    kappa, plus = fa.build_kappa("edge")
    assert kappa.size == 5 and kappa.sigma == pair_type()
    for i, c in plus.coeffs.items():
        assert kappa[i] == c
    # every support flag has each free vertex in an edge with both roots
    for i in kappa.coeffs:
        H = kappa.catalog.hypergraph(i)
        assert all((0, 1, v) in H.edges for v in (2, 3, 4))
    # kappa is the probability that F appears three times, which is 0 or 1
    assert set(kappa.coeffs.values()) == {1}
    diff = fa.kappa_difference("edge")
    for i, c in diff.coeffs.items():
        assert (c > 0) == fa.unlabelled_triple_is_edge(diff.catalog, i)
    k2, p2 = fa.build_kappa("nonedge")
    for i in k2.coeffs:
        H = k2.catalog.hypergraph(i)
        assert not any((0, 1, v) in H.edges for v in (2, 3, 4))


def test_kappa_inequality_vector():
    assert fa.kappa_inequality_vector(0).coeffs == {}
    v = fa.kappa_inequality_vector(Fraction(1, 3), "edge", 6)
    assert v.size == 6
    assert fa.kappa_inequality_vector(1, "edge", 6) * Fraction(1, 3) == v
    with pytest.raises(ValueError):
        fa.kappa_inequality_vector(-1)
    # against the empty 7-vertex hypergraph every kappa term vanishes
    empty_idx = enumerate_admissible(7).index(0)
    assert fa.kappa_inequality_vector(1, "edge", 7)[empty_idx] == 0


def test_products_of_rooted_edges_contain_butterfly():
    r1 = fa.rho_rooted()
    sq = fa.multiply(r1, r1)
    assert sq.size == 5 and len(sq.coeffs) > 0
    for i, c in sq.coeffs.items():
        assert c > 0
        H = sq.catalog.hypergraph(i)
        assert fa.contains_butterfly(H)
        # the two edges meet exactly at the root
        assert any(set(e) & set(f) == {0} for e in H.edges for f in H.edges)


def test_butterfly_and_report():
    B = fa.butterfly()
    assert fa.contains_butterfly(B)
    assert not fa.contains_butterfly(Hypergraph(4, ((0, 1, 2),)))
    E5 = enumerate_realizable(5)
    assert canonical_code(B.edges, 5) not in set(E5.codes)
    assert any(fa.contains_butterfly(H) for H in E5)
    rep = fa.cauchy_schwarz_edge_bound()
    assert rep.support_all_contain_B and rep.average_rho1_equals_rho and rep.support_size > 0
    assert "implication=butterfly_density_zero_implies_edge_density_zero" in rep.lines()


def test_flag_vector_arithmetic():
    C = catalog_for(vertex_type(), 4)
    a = FlagVector(C, {0: 1, 1: Fraction(1, 2)})
    b = FlagVector(C, {1: Fraction(-1, 2), 2: 3})
    s = a + b
    assert s.coeffs == {0: 1, 2: 3}
    assert (a - a).coeffs == {}
    assert (2 * a)[1] == 1
    assert FlagVector(C, {3: 0}).coeffs == {}
