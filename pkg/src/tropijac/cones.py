"""Cone complexes over the graph categories and Jacobian cone spaces.

Every object ``(G, D)`` contributes the orthant ``R_{>=0}^{E(G)}``; an arrow
class ``[pi] : (G, D) -> (G', D')`` contributes the face inclusion
``R^{E(G')} -> R^{E(G)}`` putting ``x_f`` at coordinate ``pi^*_E(f)`` and zero
elsewhere.  The open stratum of an object is the positive orthant modulo
the image of its automorphism group in the permutations of the edges.

Coordinates are exact rationals; in extended mode a coordinate may also be
``INF`` (``math.inf``), which only takes part in equality and ordering.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .graphs import MarkedGraph, as_quasi_stable, contraction, find_isomorphism, stabilize
from .moduli import CategoryInstance, FiberCategory, build_poset, fiber_category
from .stability import StabilityCondition

__all__ = [
    "INF",
    "OrthantCone",
    "FaceArrow",
    "GeneralizedConeComplex",
    "build_complex",
    "Stratum",
    "stratify",
    "ConePoint",
    "LocatedPoint",
    "point_locate",
    "stabilization_cone_map",
    "apply_map",
    "JacobianConeSpace",
    "jacobian_cone_space",
]

INF = math.inf


@dataclass(frozen=True)
class OrthantCone:
    n_coords: int
    extended: bool = False

    @property
    def dim(self) -> int:
        return self.n_coords


@dataclass(frozen=True)
class FaceArrow:
    """Inclusion of cone ``face`` into cone ``cone``: coordinate ``f`` of the
    face goes to coordinate ``inclusion[f]``; the rest are set to zero."""

    face: int
    cone: int
    inclusion: tuple

    def apply(self, x: Sequence, n_coords: int) -> tuple:
        y = [Fraction(0)] * n_coords
        for f, c in enumerate(self.inclusion):
            y[c] = x[f]
        return tuple(y)


@dataclass
class GeneralizedConeComplex:
    instance: CategoryInstance
    cones: list
    arrows: list
    gluing: list  # per object: frozenset of edge permutations
    extended: bool = False
    _by_pair: dict = field(default_factory=dict)

    def __post_init__(self):
        for a in self.arrows:
            self._by_pair.setdefault((a.face, a.cone), []).append(a)

    def dims(self) -> list:
        return [c.dim for c in self.cones]

    def arrows_between(self, face: int, cone: int) -> list:
        return self._by_pair.get((face, cone), [])

    def to_json(self) -> dict:
        return {
            "extended": self.extended,
            "cones": [{"object": i, "dim": c.dim,
                       "gluing": sorted(list(p) for p in self.gluing[i])}
                      for i, c in enumerate(self.cones)],
            "arrows": [{"face": a.face, "cone": a.cone, "inclusion": list(a.inclusion)}
                       for a in self.arrows],
        }


def build_complex(instance: CategoryInstance, extended: bool = False) -> GeneralizedConeComplex:
    """One orthant per object and one face arrow per non-invertible arrow class."""
    cones = [OrthantCone(o.graph.n_edges, extended) for o in instance.objects]
    poset = build_poset(instance)
    arrows = []
    for a, b in sorted(poset.relation):
        for pb in instance.edge_classes(a, b):
            arrows.append(FaceArrow(b, a, tuple(pb)))
    gluing = [instance.gluing_group(i) for i in range(len(instance.objects))]
    return GeneralizedConeComplex(instance, cones, arrows, gluing, extended)


@dataclass(frozen=True)
class Stratum:
    object: int
    dim: int
    gluing: frozenset
    closure: frozenset  # objects whose strata lie in the closure

    @property
    def order(self) -> int:
        return len(self.gluing)


def stratify(cx: GeneralizedConeComplex) -> list:
    """Open strata ``R_{>0}^{E(G)} / Aut(G, D)`` and their closures."""
    faces = {i: {i} for i in range(len(cx.cones))}
    for a in cx.arrows:
        faces[a.cone].add(a.face)
    return [Stratum(i, c.dim, cx.gluing[i], frozenset(faces[i])) for i, c in enumerate(cx.cones)]


@dataclass(frozen=True)
class ConePoint:
    carrier: int
    coords: tuple


@dataclass(frozen=True)
class LocatedPoint:
    """A point pushed to its minimal carrier, coordinates minimized over
    the gluing orbit; equal iff the original points are glued together."""

    object: int
    coords: tuple


def _orbit_min(coords: tuple, perms) -> tuple:
    best = coords
    for p in perms:
        moved = [None] * len(coords)
        for e, x in enumerate(coords):
            moved[p[e]] = x
        moved = tuple(moved)
        if moved < best:
            best = moved
    return best


def point_locate(cx: GeneralizedConeComplex, p: ConePoint) -> LocatedPoint:
    """Stratum of ``p``: contract its zero coordinates, move to the
    representative and take the least point of the gluing orbit."""
    if not 0 <= p.carrier < len(cx.cones):
        raise ValueError(f"carrier {p.carrier} is not in the complex")
    obj = cx.instance.objects[p.carrier]
    if len(p.coords) != obj.graph.n_edges:
        raise ValueError("coordinate count does not match the cone")
    coords = []
    for x in p.coords:
        if x == INF:
            if not cx.extended:
                raise ValueError("infinite coordinate in a non-extended complex")
            coords.append(INF)
        else:
            x = Fraction(x)
            if x < 0:
                raise ValueError("negative coordinate")
            coords.append(x)
    zeros = [e for e, x in enumerate(coords) if x == 0]
    pi = contraction(obj.graph, zeros)
    D = None if obj.divisor is None else pi.pushforward(obj.divisor)
    j = cx.instance.find(pi.target, D)
    rep = cx.instance.objects[j]
    iso = find_isomorphism(pi.target, rep.graph, D, rep.divisor)
    moved = [Fraction(0)] * rep.graph.n_edges
    for e, f in enumerate(pi.edge_map):
        if f is not None:
            moved[iso.edge_map[f]] = coords[e]
    return LocatedPoint(j, _orbit_min(tuple(moved), cx.gluing[j]))


# ------------------------------------------------------ stabilization map


def stabilization_cone_map(G) -> list:
    """Matrix ``|E(G^st)| x |E(G)|`` of the linear map ``x -> y`` with
    ``y_f = x_f~`` on non-exceptional edges and ``y_f = x_f1 + x_f2`` on
    exceptional ones."""
    Q = as_quasi_stable(G)
    st = stabilize(Q)
    m = [[0] * Q.graph.n_edges for _ in range(st.stable.n_edges)]
    for e, f in st.edge_map.items():
        m[f][e] = 1
    for f, (e1, e2) in st.exc_pairs.items():
        m[f][e1] = 1
        m[f][e2] = 1
    return m


def apply_map(m: list, x: Sequence) -> tuple:
    return tuple(sum((a * Fraction(b) for a, b in zip(row, x)), Fraction(0)) for row in m)


# ------------------------------------------------- Jacobian cone spaces


@dataclass
class JacobianConeSpace:
    """Cones ``C(T, D)`` over a base orthant ``sigma = R_{>=0}^k``.

    A point of ``C(T, D)`` is ``(s, (a_e, b_e) for e in T)`` with
    ``a_e + b_e = <d(e), s>``; ``a_e`` is the length of the tail-side half.
    """

    base: MarkedGraph
    metric: tuple  # per base edge a length-k tuple of nonnegative integers
    fiber: FiberCategory

    @property
    def k(self) -> int:
        return len(self.metric[0]) if self.metric else 0

    def dim(self, i: int) -> int:
        return self.k + len(self.fiber.objects[i].T)

    def dims(self) -> list:
        return [self.dim(i) for i in range(len(self.fiber.objects))]

    def edge_length(self, e: int, s: Sequence) -> Fraction:
        return sum((Fraction(c) * Fraction(x) for c, x in zip(self.metric[e], s)), Fraction(0))

    def equalities(self, i: int) -> list:
        """Rows ``r`` with ``r . (s, a_e1, b_e1, ...) = 0``."""
        o = self.fiber.objects[i]
        rows = []
        for j, e in enumerate(o.T):
            r = [-Fraction(c) for c in self.metric[e]] + [Fraction(0)] * (2 * len(o.T))
            r[self.k + 2 * j] = Fraction(1)
            r[self.k + 2 * j + 1] = Fraction(1)
            rows.append(r)
        return rows

    def contains(self, i: int, point: Sequence) -> bool:
        if any(Fraction(x) < 0 for x in point):
            return False
        return all(sum((a * Fraction(x) for a, x in zip(r, point)), Fraction(0)) == 0
                   for r in self.equalities(i))

    def face_map(self, arrow) -> list:
        """Matrix of the face inclusion ``C(target) -> C(source)`` of a fiber arrow.

        Contracting ``e^1`` forces ``a_e = 0``; contracting ``e^2`` forces
        ``b_e = 0``.  The map is the identity on ``s``.
        """
        src = self.fiber.objects[arrow.source]
        dst = self.fiber.objects[arrow.target]
        k = self.k
        n_src, n_dst = k + 2 * len(src.T), k + 2 * len(dst.T)
        m = [[Fraction(0)] * n_dst for _ in range(n_src)]
        for i in range(k):
            m[i][i] = Fraction(1)
        side = dict(arrow.choice)
        for j, e in enumerate(src.T):
            if e in side:
                row = k + 2 * j + (1 if side[e] == 1 else 0)
                for i in range(k):
                    m[row][i] = Fraction(self.metric[e][i])
            else:
                jj = dst.T.index(e)
                m[k + 2 * j][k + 2 * jj] = Fraction(1)
                m[k + 2 * j + 1][k + 2 * jj + 1] = Fraction(1)
        return m

    def slice(self, s: Sequence) -> dict:
        """Cells and face arrows over a fixed base point ``s``.

        Each cell is ``(T, values, box)`` with ``box[e] = <d(e), s>``; arrows
        are ``(source, target, choice)``.
        """
        if any(Fraction(x) <= 0 for x in s):
            raise ValueError("slice point must be positive")
        cells = []
        for o in self.fiber.objects:
            cells.append((o.T, o.values, tuple(self.edge_length(e, s) for e in o.T)))
        arrows = [(a.source, a.target, a.choice) for a in self.fiber.arrows]
        return {"cells": cells, "arrows": arrows}


def jacobian_cone_space(base: MarkedGraph, metric: Optional[Sequence] = None,
                        phi: Optional[StabilityCondition] = None, **filters) -> JacobianConeSpace:
    """Jacobian cone space over ``sigma = R^k`` with metric ``d : E -> N^k``.

    ``metric`` defaults to the coordinate metric ``k = |E|``.
    """
    if metric is None:
        metric = [tuple(int(i == e) for i in range(base.n_edges)) for e in range(base.n_edges)]
    metric = tuple(tuple(int(c) for c in row) for row in metric)
    if len(metric) != base.n_edges:
        raise ValueError("metric must give one vector per edge")
    for e, row in enumerate(metric):
        if any(c < 0 for c in row) or not any(row):
            raise ValueError(f"metric entry of edge {e} must be nonzero and nonnegative")
    if len({len(r) for r in metric}) > 1:
        raise ValueError("metric vectors must have equal length")
    fib = fiber_category(base, phi, **filters)
    return JacobianConeSpace(base, metric, fib)

