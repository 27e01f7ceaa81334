from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from tropijac.cones import (
    INF,
    ConePoint,
    apply_map,
    build_complex,
    jacobian_cone_space,
    point_locate,
    stabilization_cone_map,
    stratify,
)
from tropijac.graphs import named_graph, quasi_stable_graphs, stabilize, subdivide
from tropijac.moduli import enumerate_category
from tropijac.stability import canonical_phi, zero_phi

THETA = named_graph("theta")


@pytest.fixture(scope="module")
def qd11():
    return build_complex(enumerate_category("qd-phi", 1, 1, phi=zero_phi(1, 1)))


@pytest.fixture(scope="module")
def qsg20():
    return build_complex(enumerate_category("qsg", 2, 0))


def test_qd11_cones(qd11):
    assert sorted(qd11.dims()) == [0, 1, 2]
    strata = stratify(qd11)
    top = max(strata, key=lambda s: s.dim)
    assert top.closure == frozenset(range(3))


def test_face_arrows_are_consistent(qsg20):
    cx = qsg20
    for a in cx.arrows:
        nf = cx.cones[a.face].n_coords
        x = tuple(Fraction(i + 2, 3) for i in range(nf))
        big = a.apply(x, cx.cones[a.cone].n_coords)
        assert point_locate(cx, ConePoint(a.face, x)) == point_locate(cx, ConePoint(a.cone, big))


def test_gluing_identifies_orbits(qsg20):
    cx = qsg20
    for i, perms in enumerate(cx.gluing):
        n = cx.cones[i].n_coords
        x = tuple(Fraction(k + 1) for k in range(n))
        here = point_locate(cx, ConePoint(i, x))
        for p in perms:
            moved = [None] * n
            for e, v in enumerate(x):
                moved[p[e]] = v
            assert point_locate(cx, ConePoint(i, tuple(moved))) == here


def test_distinct_strata_stay_distinct(qsg20):
    cx = qsg20
    seen = set()
    for i, c in enumerate(cx.cones):
        loc = point_locate(cx, ConePoint(i, (Fraction(1),) * c.n_coords))
        assert loc.object == i
        seen.add(loc)
    assert len(seen) == len(cx.cones)


def test_extended_points():
    inst = enumerate_category("sg", 1, 1)
    cx = build_complex(inst, extended=True)
    loop = next(i for i, c in enumerate(cx.cones) if c.n_coords == 1)
    assert point_locate(cx, ConePoint(loop, (INF,))).coords == (INF,)
    with pytest.raises(ValueError):
        point_locate(build_complex(inst), ConePoint(loop, (INF,)))
    with pytest.raises(ValueError):
        point_locate(cx, ConePoint(loop, (-1,)))


def test_stabilization_map_on_subdivided_theta():
    Q = subdivide(THETA, [1])
    m = stabilization_cone_map(Q)
    assert len(m) == 3 and len(m[0]) == 4
    y = apply_map(m, (1, 2, 3, 4))
    st = stabilize(Q)
    (f, (e1, e2)), = st.exc_pairs.items()
    assert y[f] == (1, 2, 3, 4)[e1] + (1, 2, 3, 4)[e2]


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(quasi_stable_graphs(1, 2)), st.data())
def test_stabilization_map_surjective_on_orthants(Q, data):
    m = stabilization_cone_map(Q)
    y = data.draw(st.lists(st.fractions(min_value=0, max_value=5), min_size=len(m), max_size=len(m)))
    st_ = stabilize(Q)
    x = [Fraction(0)] * Q.graph.n_edges
    for e, f in st_.edge_map.items():
        x[e] = y[f]
    for f, (e1, e2) in st_.exc_pairs.items():
        x[e1] = y[f] / 2
        x[e2] = y[f] - y[f] / 2
    assert list(apply_map(m, x)) == list(y)


def test_jacobian_cone_space_theta():
    J = jacobian_cone_space(THETA, phi=canonical_phi(2, 0, 2))
    assert len(J.fiber.objects) == 12
    assert sorted(J.dims()) == [3] * 3 + [4] * 6 + [5] * 3
    for a in J.fiber.arrows:
        M = J.face_map(a)
        # a generic point of the face lands in the cone
        tgt = J.fiber.objects[a.target]
        s = [Fraction(2), Fraction(3), Fraction(5)]
        pt = list(s)
        for e in tgt.T:
            ell = J.edge_length(e, s)
            pt += [ell / 3, ell - ell / 3]
        img = [sum((r * x for r, x in zip(row, pt)), Fraction(0)) for row in M]
        assert J.contains(a.source, img)


def test_jacobian_cone_space_errors():
    with pytest.raises(ValueError):
        jacobian_cone_space(THETA, metric=[(1,), (0,), (1,)], phi=canonical_phi(2, 0, 2))
    J = jacobian_cone_space(THETA, phi=canonical_phi(2, 0, 2))
    with pytest.raises(ValueError):
        J.slice([1, 0, 1])


def test_jacobian_cone_space_custom_metric():
    J = jacobian_cone_space(THETA, metric=[(1, 0), (1, 1), (0, 2)], phi=canonical_phi(2, 0, 2))
    assert J.k == 2
    sl = J.slice([1, 1])
    assert {c[2] for c in sl["cells"] if c[0] == (2,)} == {(Fraction(2),)}
