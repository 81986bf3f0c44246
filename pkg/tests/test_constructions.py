import itertools
from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flagcert import constructions as cs
from flagcert.enumeration import enumerate_realizable
from flagcert.hypercore import Hypergraph, canonical_code, contains_forbidden, edge_density, max_edges_on_small_sets

import oracles


def _brute_cyclic(T):
    A = T.matrix()
    out = []
    for a, b, c in itertools.combinations(range(T.n), 3):
        if (A[a, b] and A[b, c] and A[c, a]) or (A[b, a] and A[c, b] and A[a, c]):
            out.append((a, b, c))
    return out


def test_tournament_basics():
    T = cs.Tournament.from_word(3, 0b101)
    A = T.matrix()
    assert not np.any(A & A.T) and np.all(A | A.T | np.eye(3, dtype=bool))
    assert cs.cyclic_triples(cs.Tournament.transitive(7)).shape == (0, 3)
    with pytest.raises(ValueError):
        cs.Tournament(4, (1, 0))
    with pytest.raises(ValueError):
        cs.tournament_hypergraph(cs.Tournament.transitive(2))


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 10), st.integers(0, 10**6))
def test_cyclic_triples_match_brute_force(n, seed):
    T = cs.random_tournament(n, seed)
    assert [tuple(map(int, t)) for t in cs.cyclic_triples(T)] == _brute_cyclic(T)
    out = T.matrix().sum(axis=1)
    assert len(cs.cyclic_triples(T)) == comb(n, 3) - sum(comb(int(d), 2) for d in out)


@settings(max_examples=40, deadline=None)
@given(st.integers(4, 16), st.integers(0, 10**6))
def test_tournament_hypergraphs_are_k4minus_free(n, seed):
    H = cs.tournament_hypergraph(cs.random_tournament(n, seed))
    assert not contains_forbidden(H)
    assert oracles.k4minus_free(H.edges, n) if n <= 9 else True


@settings(max_examples=20, deadline=None)
@given(st.integers(3, 9), st.integers(0, 10**6), st.data())
def test_relabelling_commutes_with_construction(n, seed, data):
    T = cs.random_tournament(n, seed)
    p = data.draw(st.permutations(range(n)))
    assert cs.tournament_hypergraph(T.relabel(p)) == cs.tournament_hypergraph(T).relabel(p)


def test_tournaments_realize_exactly_the_realizable_family():
    codes = {canonical_code(cs.tournament_hypergraph(cs.Tournament.from_word(5, w)).edges, 5) for w in range(1 << 10)}
    assert codes == set(enumerate_realizable(5).codes)


def _geometric_simplex_edges(S):
    """Compliance through actual determinants of moment-curve points."""
    t = np.arange(1, S.n + 1, dtype=float)
    pts = np.stack([t**k for k in range(1, S.r)], axis=1)
    faces = list(itertools.combinations(range(S.n), S.r - 1))
    rank = {f: i for i, f in enumerate(sorted(faces, key=lambda f: tuple(reversed(f))))}
    edges = []
    for R in itertools.combinations(range(S.n), S.r):
        sides = []
        for k in range(S.r):
            face = R[:k] + R[k + 1:]
            rows = [np.r_[1.0, pts[v]] for v in face] + [np.r_[1.0, pts[R[k]]]]
            neg = np.linalg.det(np.array(rows)) < 0
            sides.append(S.bits[rank[face]] ^ int(neg))
        if len(set(sides)) == 1:
            edges.append(R)
    return edges


@pytest.mark.parametrize("r", [3, 4])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_simplex_rule_matches_geometry(r, seed):
    S = cs.random_simplex_system(8, r, seed)
    got = [tuple(map(int, e)) for e in cs.compliant_sets(S)]
    assert got == _geometric_simplex_edges(S)


@pytest.mark.parametrize("r", [3, 4, 5])
def test_simplex_systems_span_few_edges(r):
    for seed in range(5):
        H = cs.simplex_hypergraph(cs.random_simplex_system(r + 4, r, seed))
        assert max_edges_on_small_sets(H) <= 2


def test_simplex_validation():
    with pytest.raises(ValueError):
        cs.OrientedSimplexSystem(3, 4, ())
    with pytest.raises(ValueError):
        cs.OrientedSimplexSystem(5, 3, (0,))
    assert list(cs.facet_side_parity(4)) == [1, 0, 1, 0]


def test_sparsify():
    H = cs.tournament_hypergraph(cs.random_tournament(20, 3))
    assert cs.sparsify(H, 1, 0) == H
    assert cs.sparsify(H, 0, 0).num_edges == 0
    a, b = cs.sparsify(H, Fraction(1, 2), 7), cs.sparsify(H, Fraction(1, 2), 7)
    assert a == b and set(a.edges) <= set(H.edges)
    with pytest.raises(ValueError):
        cs.sparsify(H, Fraction(3, 2))
    assert cs.sparsify_recipe(Fraction(1, 2)) == Fraction(1, 2)
    with pytest.raises(ValueError):
        cs.sparsify_recipe(Fraction(1, 5))


def test_sparsified_density_is_near_target():
    rng = np.random.default_rng(0)
    H = Hypergraph(40, tuple(e for e in itertools.combinations(range(40), 3) if rng.random() < 0.6))
    keep = cs.sparsify_recipe(edge_density(H))
    S = cs.sparsify(H, keep, 1)
    assert abs(float(edge_density(S)) - 0.25) < 0.02


def test_density_profile():
    H = cs.tournament_hypergraph(cs.random_tournament(12, 5))
    rows = cs.density_profile(H, [Fraction(1, 2), Fraction(1)])
    assert rows[-1].value == edge_density(H) and rows[-1].exact
    assert rows[0].value <= rows[-1].value
    assert rows[0].line().startswith("delta=1/2 value=")
    big = cs.tournament_hypergraph(cs.random_tournament(40, 5))
    heur = cs.density_profile(big, [Fraction(1, 2)], seed=3)[0]
    assert not heur.exact and heur.witness_size >= 20
