import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

import oracles as O
from conftest import triple
from tropijac.graphs import (
    MarkedGraph,
    QuasiStableGraph,
    contraction,
    named_graph,
    quasi_stable_graphs,
    subdivide,
)
from tropijac.stability import (
    Divisor,
    break_divisors,
    canonical_phi,
    check_semistable,
    enumerate_semistable_divisors,
    extend_phi,
    generality_witnesses,
    is_admissible,
    is_break_divisor,
    is_general,
    load_phi,
    pushforward,
    random_phi,
    v0_basis,
    zero_phi,
)
from tropijac.graphs import graph_to_json, stable_graphs

THETA = named_graph("theta")
# genus-0 vertex with a loop and a leg, loop subdivided: v = 0, w = 1
SUBLOOP = subdivide(named_graph("loop"), [0])


def _exc(Q):
    return tuple(Q.exceptional)


def test_extend_phi_examples():
    phi = canonical_phi(2, 0, 2)
    assert extend_phi(phi, THETA) == (1, 1)
    assert extend_phi(phi, subdivide(THETA, [0])) == (1, 1, 0)
    assert extend_phi(canonical_phi(2, 0, 2), named_graph("dumbbell")) == (1, 1)
    assert set(extend_phi(zero_phi(1, 1), SUBLOOP)) == {0}
    assert set(extend_phi(canonical_phi(2, 0, 0), THETA)) == {0}


def test_extend_phi_type_mismatch():
    with pytest.raises(ValueError):
        extend_phi(zero_phi(1, 1), THETA)


def test_non_hyperbolic():
    with pytest.raises(ValueError, match="non-hyperbolic"):
        canonical_phi(0, 1, 0)


def test_admissible_examples():
    assert is_admissible(THETA, (5, -3))
    assert is_admissible(SUBLOOP, (-1, 1))
    assert not is_admissible(SUBLOOP, (0, 0))
    v = check_semistable(SUBLOOP, (0, 0), zero_phi(1, 1))
    assert not v.admissible and not v.semistable and v.reason == "not admissible"


def test_theta_semistability_examples():
    phi = canonical_phi(2, 0, 2)
    v = check_semistable(THETA, (1, 1), phi)
    assert v.semistable and v.stable
    v = check_semistable(THETA, (3, -1), phi)
    assert not v.semistable and v.witness == (1,)


def test_subdivided_loop_is_stable():
    v = check_semistable(SUBLOOP, (-1, 1), zero_phi(1, 1))
    assert v.semistable and v.stable


def test_degree_mismatch():
    v = check_semistable(THETA, (1, 0), canonical_phi(2, 0, 2))
    assert v.admissible and not v.semistable and "degree" in v.reason


def test_canonical_validates():
    for g, n, d in [(1, 1, 0), (1, 1, 1), (2, 0, 1), (2, 0, 3), (1, 2, 1), (0, 4, 1)]:
        assert canonical_phi(g, n, d).validate() == []


def test_bad_rule_is_caught():
    from tropijac.stability import StabilityCondition

    phi = StabilityCondition(2, 0, 2, lambda G, v: Fraction(2) if v == 0 else Fraction(0))
    assert phi.validate()


@pytest.mark.parametrize("g,n,dim", [(1, 1, 0), (2, 0, 0), (1, 2, 2), (0, 4, 3), (2, 1, 2)])
def test_v0_dimensions(g, n, dim):
    assert len(v0_basis(g, n)) == dim


@pytest.mark.parametrize("seed", range(4))
def test_random_phi_valid(seed):
    phi = random_phi(1, 2, 1, seed)
    assert phi.validate() == []


def test_load_phi_round_trip():
    phi = random_phi(1, 2, 1, 7)
    items = []
    for G in stable_graphs(1, 2):
        items.append({"graph": graph_to_json(G),
                      "values": {str(v): str(x) for v, x in enumerate(phi.values(G))}})
    loaded = load_phi({"g": 1, "n": 2, "degree": 1, "graphs": items})
    for G in stable_graphs(1, 2):
        assert loaded.values(G) == phi.values(G)
    items[0]["values"]["0"] = "5"
    with pytest.raises(ValueError):
        load_phi({"g": 1, "n": 2, "degree": 1, "graphs": items})
    with pytest.raises(ValueError, match="misses"):
        load_phi({"g": 1, "n": 2, "degree": 1, "graphs": items[1:]})


def test_generality_examples():
    assert is_general(canonical_phi(2, 0, 2)).general
    assert is_general(zero_phi(1, 1)).general
    v = is_general(canonical_phi(2, 0, 1))
    assert not v.general
    # the witness must really be one
    Q, S = v.graph, v.subset
    phi = extend_phi(canonical_phi(2, 0, 1), Q)
    assert not O.brute_general_on(Q.graph.edges, _exc(Q), phi)
    assert S in generality_witnesses(canonical_phi(2, 0, 1), Q)
    # theta with S = {v1} is a witness too
    assert (0,) in generality_witnesses(canonical_phi(2, 0, 1), THETA)


PHIS = [canonical_phi(2, 0, d) for d in (1, 2, 3)] + [canonical_phi(1, 1, d) for d in (0, 1)] \
    + [random_phi(1, 2, 1, s, denominator=q) for s, q in [(0, 1009), (1, 2)]]


@pytest.mark.parametrize("phi", PHIS, ids=lambda p: f"{p.name}-{p.g}{p.n}{p.degree}")
def test_semistable_matches_brute_force(phi):
    for Q in quasi_stable_graphs(phi.g, phi.n):
        pv = extend_phi(phi, Q)
        ours = {D.values: check_semistable(Q, D, phi).stable
                for D in enumerate_semistable_divisors(Q, phi)}
        brute = dict(O.brute_semistable_divisors(Q.graph.edges, _exc(Q), pv))
        assert ours == brute
        assert O.brute_general_on(Q.graph.edges, _exc(Q), pv) == (not generality_witnesses(phi, Q))


def test_enumerate_examples():
    phi = canonical_phi(2, 0, 2)
    assert [D.values for D in enumerate_semistable_divisors(THETA, phi)] == [(2, 0), (1, 1), (0, 2)]
    assert [D.values for D in enumerate_semistable_divisors(SUBLOOP, zero_phi(1, 1))] == [(-1, 1)]
    assert [D.values for D in enumerate_semistable_divisors(named_graph("loop"), zero_phi(1, 1))] == [(0,)]


@settings(max_examples=80, deadline=None)
@given(st.sampled_from(quasi_stable_graphs(2, 0)), st.data())
def test_complement_symmetry_and_exceptional_equality(Q, data):
    """The inequalities for S and its complement agree, and unions of
    exceptional vertices are always tight."""
    X = Q.graph
    nv = X.n_vertices
    D = data.draw(st.lists(st.integers(-3, 4), min_size=nv, max_size=nv))
    for v in Q.exceptional:
        D[v] = 1
    phi = extend_phi(canonical_phi(2, 0, sum(D)), Q)
    full = O.brute_semistable(X.edges, _exc(Q), phi, D)
    half_semi, half_strict = True, True
    exc = set(Q.exceptional)
    for r in range(nv):
        for rest in itertools.combinations(range(1, nv), r):
            S = {0, *rest}
            h = Fraction(O.cut_size(X.edges, S), 2)
            p = sum((phi[v] for v in S), Fraction(0))
            x = sum(D[v] for v in S)
            if not p - h <= x <= p + h:
                half_semi = False
            comp = set(range(nv)) - S
            if not (S <= exc or comp <= exc) and x in (p - h, p + h):
                half_strict = False
    assert full == (half_semi, half_semi and half_strict)
    for r in range(1, len(exc) + 1):
        for S in itertools.combinations(sorted(exc), r):
            S = set(S)
            h = Fraction(O.cut_size(X.edges, S), 2)
            assert sum(D[v] for v in S) == sum((phi[v] for v in S), Fraction(0)) + h


def test_break_examples():
    v = is_break_divisor(THETA, (1, 1))
    assert v.is_break and len(v.tree) == 1
    assert is_break_divisor(THETA, (2, 0)).is_break
    assert not is_break_divisor(THETA, (3, -1)).is_break
    assert "degree" in is_break_divisor(THETA, (1, 0)).reason
    assert break_divisors(THETA) == {(2, 0), (1, 1), (0, 2)}


@pytest.mark.parametrize("g", [2, 3])
def test_break_divisors_match_brute_force(g):
    for Q in quasi_stable_graphs(g, 0):
        ours = break_divisors(Q)
        assert ours == O.brute_break_divisors(Q.graph.genus, Q.graph.edges)
        for D in ours:
            w = is_break_divisor(Q, D)
            assert w.is_break
            # the witness reproduces D
            rebuilt = list(Q.graph.genus)
            for e, v in w.assignment.items():
                assert v in Q.graph.edges[e] and e not in w.tree
                rebuilt[v] += 1
            assert tuple(rebuilt) == D


def test_pushforward_examples_and_composition():
    assert pushforward(contraction(THETA, []), (1, 1)).values == (1, 1)
    assert pushforward(contraction(THETA, [2]), (1, 1)).values == (2,)
    L = SUBLOOP.graph
    assert pushforward(contraction(L, [0]), (-1, 1)).values == (0,)
    G = subdivide(THETA, [0, 1]).graph
    D = (1, 0, 1, 1)
    a = contraction(G, [0])
    b = contraction(a.target, [0])
    assert pushforward(b, pushforward(a, D)) == pushforward(a.then(b), D)


def test_divisor_json():
    D = Divisor((2, -1))
    assert D.degree == 1
    assert D.to_json(["a", "b"]) == {"a": 2, "b": -1}
    assert Divisor.from_json({"b": -1, "a": 2}, ["a", "b"]) == D
