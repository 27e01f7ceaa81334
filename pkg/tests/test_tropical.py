import itertools
import random
from fractions import Fraction

import pytest

import oracles as O
from tropijac.graphs import named_graph, spanning_trees, stable_graphs, subdivide
from tropijac.stability import canonical_phi, is_break_divisor, random_phi, zero_phi
from tropijac.tropical import (
    MetricDivisor,
    MetricGraph,
    TorusPoint,
    abel_jacobi,
    build_jacobian_complex,
    euler_characteristic,
    f_vector,
    gram_matrix,
    kirchhoff_determinant,
    linearly_equivalent,
    stable_representative,
    total_top_volume,
)
from tropijac import _linalg

THETA = named_graph("theta")
DUMBBELL = named_graph("dumbbell")
LOOP = named_graph("loop")


def model_of(M, N):
    return O.ModelGraph(M.graph.n_vertices, list(M.graph.edges), M.lengths, N)


def model_divisor(model, D):
    vec = [0] * model.size
    for p, c in D.terms:
        v = p.vertex if p.edge is None else model.vertex_of(p.edge, p.offset)
        vec[v] += c
    return vec


def lattice_points(cx, N):
    """Distinct complex points with coordinates in ``(1/N) Z``."""
    pts = set()
    for cell in cx.cells:
        axes = [[Fraction(k, N) for k in range(int(b * N) + 1)] for b in cell.box]
        for x in itertools.product(*axes):
            pts.add(cx.carrier(cell.index, x))
    return sorted(pts)


def test_theta_complex():
    M = MetricGraph(THETA, [1, 1, 1])
    cx = build_jacobian_complex(M, canonical_phi(2, 0, 2))
    assert f_vector(cx) == (3, 6, 3)
    assert euler_characteristic(cx) == 0
    assert total_top_volume(cx) == 3 == _linalg.det(gram_matrix(M))
    assert cx.check_gluing() == []
    # our cycle basis differs from [[2,-1],[-1,2]] by a unimodular change
    assert _linalg.det([[2, -1], [-1, 2]]) == _linalg.det(M.gram)
    tops = sorted(c.T for c in cx.top_cells())
    assert sorted(tuple(e for e in range(3) if e not in T) for T in tops) == spanning_trees(THETA)


def test_dumbbell_complex():
    M = MetricGraph(DUMBBELL, [1, 2, 3])
    cx = build_jacobian_complex(M, canonical_phi(2, 0, 2))
    assert f_vector(cx) == (1, 2, 1)
    assert total_top_volume(cx) == 3 == kirchhoff_determinant(M)


def test_loop_complex():
    for ell in (Fraction(1), Fraction(7, 3)):
        M = MetricGraph(LOOP, [ell])
        cx = build_jacobian_complex(M, zero_phi(1, 1))
        assert f_vector(cx) == (1, 1)
        assert total_top_volume(cx) == ell


def brute_kirchhoff(M):
    total = Fraction(0)
    for T in O.brute_spanning_trees(M.graph.n_vertices, list(M.graph.edges)):
        p = Fraction(1)
        for e in range(M.graph.n_edges):
            if e not in T:
                p *= M.lengths[e]
        total += p
    return total


@pytest.mark.parametrize("seed", range(6))
def test_gram_determinant_is_weighted_tree_count(seed):
    rng = random.Random(seed)
    G = rng.choice([g for g in stable_graphs(2, 0) + stable_graphs(3, 0) if g.b1 >= 2])
    M = MetricGraph(G, [Fraction(rng.randint(1, 9), rng.randint(1, 4)) for _ in range(G.n_edges)])
    assert _linalg.det(M.gram) == brute_kirchhoff(M) == kirchhoff_determinant(M)


@pytest.mark.parametrize("lengths,N", [([1, 1, 1], 2), ([1, 2, 1], 1), ([Fraction(1, 2), 1, Fraction(3, 2)], 2)])
def test_abel_jacobi_matches_chip_firing(lengths, N):
    M = MetricGraph(THETA, lengths)
    model = model_of(M, N)
    rng = random.Random(5)
    spots = [(None, v) for v in range(2)]
    for e in range(3):
        spots += [(e, Fraction(k, N)) for k in range(1, int(M.lengths[e] * N))]

    def divisor(points):
        terms = []
        for (e, t), c in points:
            terms.append((M.vertex(t) if e is None else M.point(e, t), c))
        return MetricDivisor.from_terms(terms)

    for _ in range(60):
        a = divisor([(rng.choice(spots), 1) for _ in range(2)])
        b = divisor([(rng.choice(spots), 1) for _ in range(2)])
        same = model.class_key(model_divisor(model, a)) == model.class_key(model_divisor(model, b))
        assert linearly_equivalent(M, a, b) == same


@pytest.mark.parametrize("graph,lengths,phi,N", [
    (THETA, [1, 1, 1], canonical_phi(2, 0, 2), 2),
    (THETA, [1, 1, 1], canonical_phi(2, 0, 2), 3),
    (THETA, [Fraction(1, 2), 1, Fraction(3, 2)], canonical_phi(2, 0, 2), 2),
    (THETA, [2, 1, 1], canonical_phi(2, 0, 0), 1),
    (DUMBBELL, [1, 2, 1], canonical_phi(2, 0, 2), 2),
    (LOOP, [Fraction(7, 3)], zero_phi(1, 1), 3),
])
def test_lattice_points_biject_onto_model_picard_group(graph, lengths, phi, N):
    M = MetricGraph(graph, lengths)
    cx = build_jacobian_complex(M, phi)
    model = model_of(M, N)
    keys = [model.class_key(model_divisor(model, cx.realize(i, x))) for i, x in lattice_points(cx, N)]
    assert len(keys) == len(set(keys)) == model.trees()


@pytest.mark.parametrize("graph,lengths,phi,N", [
    (THETA, [1, 1, 1], canonical_phi(2, 0, 2), 2),
    (DUMBBELL, [1, 2, 1], canonical_phi(2, 0, 2), 2),
    (LOOP, [Fraction(7, 3)], zero_phi(1, 1), 3),
])
def test_representative_matches_grid_scan(graph, lengths, phi, N):
    M = MetricGraph(graph, lengths)
    cx = build_jacobian_complex(M, phi)
    model = model_of(M, N)
    grid = {}
    for i, x in lattice_points(cx, N):
        grid[model.class_key(model_divisor(model, cx.realize(i, x)))] = (i, x)
    rng = random.Random(11)
    spots = [M.vertex(v) for v in range(M.graph.n_vertices)]
    for e in range(M.graph.n_edges):
        spots += [M.point(e, Fraction(k, N)) for k in range(1, int(M.lengths[e] * N))]
    for _ in range(25):
        terms = [(rng.choice(spots), 1) for _ in range(phi.degree + 2)]
        terms += [(rng.choice(spots), -1), (rng.choice(spots), -1)]
        D0 = MetricDivisor.from_terms(terms)
        rep = stable_representative(M, phi, D0, complex=cx)
        assert (rep.cell, rep.coords) == grid[model.class_key(model_divisor(model, D0))]
        assert linearly_equivalent(M, rep.divisor, D0)


def test_representative_examples():
    M = MetricGraph(THETA, [1, 1, 1])
    phi = canonical_phi(2, 0, 2)
    mid = M.point(0, Fraction(1, 2))
    rep = stable_representative(M, phi, MetricDivisor.from_terms([(mid, 2)]))
    again = stable_representative(M, phi, rep.divisor)
    assert again == rep
    L = MetricGraph(LOOP, [1])
    D0 = MetricDivisor.from_terms([(L.point(0, Fraction(1, 3)), 1), (L.vertex(0), -1)])
    rep = stable_representative(L, zero_phi(1, 1), D0)
    assert rep.coords == (Fraction(1, 3),)
    with pytest.raises(ValueError):
        stable_representative(M, phi, MetricDivisor.from_terms([(mid, 1)]))
    with pytest.raises(ValueError):
        stable_representative(M, canonical_phi(2, 0, 1), MetricDivisor.from_terms([(mid, 1)]))


@pytest.mark.parametrize("graph", [THETA, DUMBBELL] + [G for G in stable_graphs(3, 0) if G.n_edges == 6][:3])
def test_cells_are_break_divisors(graph):
    g = graph.total_genus
    M = MetricGraph(graph, [1] * graph.n_edges)
    cx = build_jacobian_complex(M, canonical_phi(g, 0, g))
    cells = {(c.T, c.values) for c in cx.cells}
    expected = set()
    base = M.graph
    for r in range(base.n_edges + 1):
        for T in itertools.combinations(range(base.n_edges), r):
            Q = subdivide(base, T)
            for D in O.brute_break_divisors(Q.graph.genus, Q.graph.edges):
                if all(D[v] == 1 for v in Q.exceptional):
                    expected.add((T, D[:base.n_vertices]))
    assert cells == expected
    for c in cx.cells:
        Q = subdivide(base, c.T)
        assert is_break_divisor(Q, tuple(c.values) + (1,) * len(c.T)).is_break


def test_torus_point_reduction():
    M = MetricGraph(THETA, [1, 1, 1])
    v = [Fraction(1, 3), Fraction(-2, 5)]
    shifted = [v[i] + sum(M.gram[i][j] * k for j, k in enumerate((2, -3))) for i in range(2)]
    assert TorusPoint.reduce(M, v) == TorusPoint.reduce(M, shifted)


def test_metric_divisor_json():
    M = MetricGraph(THETA, [1, 1, 1])
    D = MetricDivisor.from_terms([(M.point(1, Fraction(1, 4)), 2), (M.vertex(0), -1)])
    assert MetricDivisor.from_json(M, D.to_json(M)) == D
    assert D.degree == 1
    assert abel_jacobi(M, D - D) == abel_jacobi(M, MetricDivisor(()))


def test_bad_lengths():
    with pytest.raises(ValueError):
        MetricGraph(THETA, [1, 0, 1])
    with pytest.raises(ValueError):
        MetricGraph(THETA, [1, 1])


def test_random_general_phi_tiles():
    phi = random_phi(1, 2, 1, 4)
    G = [H for H in stable_graphs(1, 2) if H.b1 == 1 and H.n_edges == 2][0]
    M = MetricGraph(G, [1, 2])
    cx = build_jacobian_complex(M, phi)
    assert total_top_volume(cx) == _linalg.det(M.gram)
    assert cx.check_gluing() == []
