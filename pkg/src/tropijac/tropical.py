"""Metric graphs, tropical Abel-Jacobi and the Jacobian polytopal complex.

With a spanning tree fixed, each co-tree edge ``c`` closes a cycle
``gamma_c``.  The torus model of ``Pic^0`` is ``R^b / M Z^b`` where
``M_ij = sum_e l_e gamma_i(e) gamma_j(e)``.  The Abel-Jacobi image of a point
at offset ``t`` from the tail of edge ``e`` is ``AJ(tail) + t * gamma(e)``,
where ``gamma(e) = (gamma_i(e))_i`` and ``AJ`` of a vertex is the integral of
the basis along the tree path from the basepoint.

A cell of the Jacobian complex is indexed by a fiber-category object
``(T, D)``: a point ``x`` of the box ``prod_{e in T} [0, l_e]`` realizes the
divisor ``sum_v D(v) v + sum_{e in T} p_e(x_e)``.  Its chart is affine with
linear part ``[gamma(e)]_{e in T}``.  All arithmetic is in ``Fraction``.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import ceil, floor
from typing import Optional, Sequence

from . import _linalg
from .graphs import MarkedGraph, canonical_labeling, spanning_trees
from .moduli import FiberCategory, fiber_category
from .stability import StabilityCondition, is_general

__all__ = [
    "MetricGraph",
    "PointOnGraph",
    "MetricDivisor",
    "TorusPoint",
    "cycle_basis",
    "gram_matrix",
    "kirchhoff_determinant",
    "abel_jacobi",
    "linearly_equivalent",
    "Cell",
    "JacobianComplex",
    "build_jacobian_complex",
    "f_vector",
    "euler_characteristic",
    "total_top_volume",
    "Representative",
    "stable_representative",
]


class MetricGraph:
    """A stable graph with positive rational edge lengths.

    Edges are reoriented so that the tail has the lower canonical label;
    the basepoint is the vertex with canonical label 0.
    """

    def __init__(self, graph: MarkedGraph, lengths: Sequence, orient: bool = True):
        lengths = tuple(Fraction(x) for x in lengths)
        if len(lengths) != graph.n_edges:
            raise ValueError("need one length per edge")
        if any(x <= 0 for x in lengths):
            raise ValueError("edge lengths must be positive")
        _, order = canonical_labeling(graph)
        rank = {v: i for i, v in enumerate(order)}
        flipped = set()
        if orient:
            flipped = {e for e, (a, b) in enumerate(graph.edges) if rank[a] > rank[b]}
            edges = [(b, a) if e in flipped else (a, b) for e, (a, b) in enumerate(graph.edges)]
            graph = MarkedGraph(graph.genus, edges, graph.legs)
        self.graph = graph
        self.flipped = frozenset(flipped)  # edges whose given direction was reversed
        self.lengths = lengths
        self.basepoint = order[0]

    def __repr__(self):
        return f"MetricGraph({self.graph!r}, lengths={self.lengths})"

    @property
    def b1(self) -> int:
        return self.graph.b1

    def tail(self, e: int) -> int:
        return self.graph.edges[e][0]

    def head(self, e: int) -> int:
        return self.graph.edges[e][1]

    @cached_property
    def tree(self) -> tuple:
        """BFS spanning tree from the basepoint, as a sorted edge tuple."""
        G = self.graph
        seen = {self.basepoint}
        tree = []
        queue = deque([self.basepoint])
        while queue:
            v = queue.popleft()
            for e in G.incident_edges(v):
                w = G.other_end(e, v)
                if w not in seen:
                    seen.add(w)
                    tree.append(e)
                    queue.append(w)
        return tuple(sorted(tree))

    @cached_property
    def tree_paths(self) -> list:
        """Signed tree-edge vector of the path from the basepoint to each vertex."""
        G = self.graph
        paths = {self.basepoint: [0] * G.n_edges}
        queue = deque([self.basepoint])
        tree = set(self.tree)
        while queue:
            v = queue.popleft()
            for e in G.incident_edges(v):
                if e not in tree:
                    continue
                w = G.other_end(e, v)
                if w in paths:
                    continue
                p = list(paths[v])
                p[e] += 1 if self.tail(e) == v else -1
                paths[w] = p
                queue.append(w)
        return [paths[v] for v in range(G.n_vertices)]

    @cached_property
    def cycles(self) -> list:
        P = self.tree_paths
        tree = set(self.tree)
        out = []
        for c in range(self.graph.n_edges):
            if c in tree:
                continue
            gam = [pt - ph for pt, ph in zip(P[self.tail(c)], P[self.head(c)])]
            gam[c] += 1
            out.append(gam)
        return out

    @cached_property
    def gram(self) -> list:
        l = self.lengths
        return [[sum((l[e] * a[e] * b[e] for e in range(len(l))), Fraction(0)) for b in self.cycles]
                for a in self.cycles]

    @cached_property
    def gram_inverse(self) -> list:
        return _linalg.inverse(self.gram) if self.gram else []

    def gamma(self, e: int) -> tuple:
        return tuple(Fraction(c[e]) for c in self.cycles)

    @cached_property
    def vertex_aj(self) -> list:
        out = []
        for P in self.tree_paths:
            out.append(tuple(sum((Fraction(c[e] * P[e]) * self.lengths[e]
                                  for e in range(self.graph.n_edges)), Fraction(0))
                             for c in self.cycles))
        return out

    def point(self, edge: int, offset) -> "PointOnGraph":
        return PointOnGraph.on_edge(self, edge, offset)

    def vertex(self, v: int) -> "PointOnGraph":
        return PointOnGraph(None, Fraction(0), v)


def cycle_basis(G: MetricGraph) -> list:
    return [list(c) for c in G.cycles]


def gram_matrix(G: MetricGraph) -> list:
    return [list(r) for r in G.gram]


def kirchhoff_determinant(G: MetricGraph) -> Fraction:
    """``sum over spanning trees T of prod_{e not in T} l_e`` (equals ``det M``)."""
    total = Fraction(0)
    for T in spanning_trees(G.graph):
        prod = Fraction(1)
        for e in range(G.graph.n_edges):
            if e not in T:
                prod *= G.lengths[e]
        total += prod
    return total


@dataclass(frozen=True)
class PointOnGraph:
    """A point on edge ``edge`` at ``offset`` from its tail, or a vertex.

    Endpoints are stored as vertices (``edge is None``).
    """

    edge: Optional[int]
    offset: Fraction
    vertex: Optional[int] = None

    @classmethod
    def on_edge(cls, G: MetricGraph, edge: int, offset) -> "PointOnGraph":
        t = Fraction(offset)
        ell = G.lengths[edge]
        if G.graph.is_loop(edge):
            t = t - ell * floor(t / ell)
        elif not 0 <= t <= ell:
            raise ValueError(f"offset {t} outside [0, {ell}] on edge {edge}")
        if t == 0:
            return cls(None, Fraction(0), G.tail(edge))
        if t == ell:
            return cls(None, Fraction(0), G.head(edge))
        return cls(edge, t, None)

    def aj(self, G: MetricGraph) -> tuple:
        if self.edge is None:
            return G.vertex_aj[self.vertex]
        base = G.vertex_aj[G.tail(self.edge)]
        return tuple(a + self.offset * c for a, c in zip(base, G.gamma(self.edge)))

    def sort_key(self):
        return (0, self.vertex, 0) if self.edge is None else (1, self.edge, self.offset)


@dataclass(frozen=True)
class MetricDivisor:
    """Sorted ``((point, coefficient), ...)`` with zero terms removed."""

    terms: tuple

    @classmethod
    def from_terms(cls, terms) -> "MetricDivisor":
        acc = {}
        for p, c in terms:
            acc[p] = acc.get(p, 0) + int(c)
        items = sorted(((p, c) for p, c in acc.items() if c), key=lambda pc: pc[0].sort_key())
        return cls(tuple(items))

    @property
    def degree(self) -> int:
        return sum(c for _, c in self.terms)

    def __add__(self, other):
        return MetricDivisor.from_terms(self.terms + other.terms)

    def __neg__(self):
        return MetricDivisor.from_terms((p, -c) for p, c in self.terms)

    def __sub__(self, other):
        return self + (-other)

    def to_json(self, G: MetricGraph) -> list:
        out = []
        for p, c in self.terms:
            if p.edge is None:
                out.append({"vertex": p.vertex, "coeff": c})
            else:
                out.append({"edge": p.edge, "offset_num": p.offset.numerator,
                            "offset_den": p.offset.denominator, "coeff": c})
        return out

    @classmethod
    def from_json(cls, G: MetricGraph, items: list) -> "MetricDivisor":
        terms = []
        for it in items:
            c = int(it.get("coeff", 1))
            if "vertex" in it:
                terms.append((G.vertex(int(it["vertex"])), c))
            else:
                t = Fraction(int(it["offset_num"]), int(it.get("offset_den", 1)))
                terms.append((G.point(int(it["edge"]), t), c))
        return cls.from_terms(terms)


@dataclass(frozen=True)
class TorusPoint:
    """A point of ``R^b / M Z^b``, stored reduced into the fundamental
    parallelepiped ``M [0, 1)^b``."""

    vector: tuple

    @classmethod
    def reduce(cls, G: MetricGraph, v: Sequence) -> "TorusPoint":
        if not G.gram:
            return cls(())
        z = _linalg.matvec(G.gram_inverse, v)
        frac = [x - floor(x) for x in z]
        return cls(tuple(_linalg.matvec(G.gram, frac)))


def abel_jacobi(G: MetricGraph, D: MetricDivisor) -> TorusPoint:
    """``A(D - deg(D) * basepoint)`` in the torus model."""
    return TorusPoint.reduce(G, _aj_vector(G, D))


def _aj_vector(G: MetricGraph, D: MetricDivisor) -> list:
    v = [Fraction(0)] * G.b1
    for p, c in D.terms:
        for i, a in enumerate(p.aj(G)):
            v[i] += c * a
    return v


def linearly_equivalent(G: MetricGraph, D1: MetricDivisor, D2: MetricDivisor) -> bool:
    return D1.degree == D2.degree and abel_jacobi(G, D1) == abel_jacobi(G, D2)


# --------------------------------------------------------- the complex


@dataclass(frozen=True)
class Cell:
    index: int
    T: tuple
    values: tuple  # divisor on base vertices
    box: tuple  # upper bounds l_e, e in T

    @property
    def dim(self) -> int:
        return len(self.T)


class JacobianComplex:
    """Cells, face gluings and affine charts for a metric graph and ``phi``."""

    def __init__(self, G: MetricGraph, phi: StabilityCondition, fiber: Optional[FiberCategory] = None):
        self.metric = G
        self.phi = phi
        self.fiber = fiber if fiber is not None else fiber_category(G.graph, phi)
        self.cells = [Cell(i, o.T, o.values, tuple(G.lengths[e] for e in o.T))
                      for i, o in enumerate(self.fiber.objects)]
        self.faces = [(a.source, a.target, a.choice) for a in self.fiber.arrows]
        self._face_index = {}
        for src, dst, choice in self.faces:
            if len(choice) == 1:
                self._face_index[(src,) + choice[0]] = dst
        self._charts = [self._chart(c) for c in self.cells]

    def _chart(self, cell: Cell) -> tuple:
        G = self.metric
        terms = [(G.vertex(v), x) for v, x in enumerate(cell.values)]
        terms += [(G.vertex(G.tail(e)), 1) for e in cell.T]
        offset = tuple(_aj_vector(G, MetricDivisor.from_terms(terms)))
        linear = [[G.gamma(e)[i] for e in cell.T] for i in range(G.b1)]
        return offset, linear

    def chart(self, i: int) -> tuple:
        """``(offset, linear)``: the cell point ``x`` goes to ``offset + linear x``."""
        return self._charts[i]

    def chart_value(self, i: int, x: Sequence) -> list:
        off, lin = self._charts[i]
        return [o + sum((a * Fraction(t) for a, t in zip(row, x)), Fraction(0))
                for o, row in zip(off, lin)]

    def realize(self, i: int, x: Sequence) -> MetricDivisor:
        """Divisor of the cell point ``x`` (coordinates measured from tails)."""
        cell = self.cells[i]
        x = [Fraction(t) for t in x]
        if len(x) != cell.dim or any(not 0 <= t <= b for t, b in zip(x, cell.box)):
            raise ValueError("point outside the cell box")
        G = self.metric
        terms = [(G.vertex(v), c) for v, c in enumerate(cell.values)]
        terms += [(G.point(e, t), 1) for e, t in zip(cell.T, x)]
        return MetricDivisor.from_terms(terms)

    @property
    def top_dim(self) -> int:
        return max((c.dim for c in self.cells), default=0)

    def top_cells(self) -> list:
        return [c for c in self.cells if c.dim == self.metric.b1]

    def volume(self, i: int) -> Fraction:
        cell = self.cells[i]
        _, lin = self._charts[i]
        vol = abs(_linalg.det(lin)) if lin else Fraction(1)
        for b in cell.box:
            vol *= b
        return vol

    def carrier(self, i: int, x: Sequence) -> tuple:
        """Push a cell point to the cell where all its coordinates are interior."""
        x = [Fraction(t) for t in x]
        while True:
            cell = self.cells[i]
            hit = next(((j, t) for j, t in enumerate(x) if t == 0 or t == cell.box[j]), None)
            if hit is None:
                return i, tuple(x)
            j, t = hit
            side = 1 if t == 0 else 2
            i = self._face_index[(i, cell.T[j], side)]
            del x[j]

    def preimages(self, target: Sequence) -> list:
        """All ``(cell, x)`` with ``chart(x) = target`` in the torus, pushed to
        their carriers and deduplicated."""
        G = self.metric
        found = set()
        for cell in self.cells:
            for x in self._solve_cell(cell, target):
                found.add(self.carrier(cell.index, x))
        return sorted(found)

    def _solve_cell(self, cell: Cell, target: Sequence):
        G = self.metric
        off, lin = self._charts[cell.index]
        b, k = G.b1, cell.dim
        rhs0 = [Fraction(t) - o for t, o in zip(target, off)]
        if b == 0:
            yield ()
            return
        Minv = G.gram_inverse
        N = _linalg.matmul(Minv, lin) if k else [[] for _ in range(b)]
        w = _linalg.matvec(Minv, rhs0)
        # z = N x - w with x in the box
        ranges = []
        for i in range(b):
            lo = hi = -w[i]
            for j in range(k):
                t = N[i][j] * cell.box[j]
                lo += min(t, 0)
                hi += max(t, 0)
            ranges.append(range(ceil(lo), floor(hi) + 1))
        for z in itertools.product(*ranges):
            rhs = [r + s for r, s in zip(rhs0, _linalg.matvec(G.gram, z))]
            if k == 0:
                if all(r == 0 for r in rhs):
                    yield ()
                continue
            x = _linalg.solve(lin, rhs)
            if x is None:
                continue
            if all(0 <= t <= bnd for t, bnd in zip(x, cell.box)):
                yield tuple(x)

    def check_gluing(self) -> list:
        """Faces whose chart is not the restriction of the cell chart (mod lattice)."""
        bad = []
        G = self.metric
        for src, dst, choice in self.faces:
            cs, cd = self.cells[src], self.cells[dst]
            probe = [Fraction(j + 1, j + 3) * b for j, b in enumerate(cd.box)]
            side = dict(choice)
            x = []
            for e, bnd in zip(cs.T, cs.box):
                if e in side:
                    x.append(Fraction(0) if side[e] == 1 else bnd)
                else:
                    x.append(probe[cd.T.index(e)])
            if TorusPoint.reduce(G, self.chart_value(src, x)) != TorusPoint.reduce(G, self.chart_value(dst, probe)):
                bad.append((src, dst, choice))
        return bad

    def to_json(self) -> dict:
        def q(x):
            return str(Fraction(x))

        G = self.metric
        return {
            "b1": G.b1,
            "gram": [[q(x) for x in row] for row in G.gram],
            "f_vector": list(f_vector(self)),
            "euler_characteristic": euler_characteristic(self),
            "total_top_volume": q(total_top_volume(self)),
            "cells": [{"id": c.index, "subdivided": list(c.T), "divisor": list(c.values),
                       "box": [q(b) for b in c.box],
                       "chart": {"offset": [q(x) for x in self._charts[c.index][0]],
                                 "linear": [[q(x) for x in row] for row in self._charts[c.index][1]]}}
                      for c in self.cells],
            "gluings": [{"cell": s, "face": t,
                         "endpoints": [{"edge": e, "at": "tail" if side == 1 else "head"}
                                       for e, side in ch]}
                        for s, t, ch in self.faces if len(ch) == 1],
        }


def build_jacobian_complex(G: MetricGraph, phi: StabilityCondition) -> JacobianComplex:
    if phi.type != G.graph.type:
        raise ValueError("stability condition type does not match the graph")
    return JacobianComplex(G, phi)


def f_vector(cx: JacobianComplex) -> tuple:
    top = cx.top_dim
    return tuple(sum(1 for c in cx.cells if c.dim == k) for k in range(top + 1))


def euler_characteristic(cx: JacobianComplex) -> int:
    return sum((-1) ** k * f for k, f in enumerate(f_vector(cx)))


def total_top_volume(cx: JacobianComplex) -> Fraction:
    return sum((cx.volume(c.index) for c in cx.top_cells()), Fraction(0))


# ------------------------------------------------- stable representatives


@dataclass(frozen=True)
class Representative:
    cell: int
    coords: tuple
    divisor: MetricDivisor


_GENERAL_CACHE = {}


def _general(phi: StabilityCondition):
    key = id(phi)
    if key not in _GENERAL_CACHE:
        _GENERAL_CACHE[key] = (phi, is_general(phi))
    return _GENERAL_CACHE[key][1]


def stable_representative(G: MetricGraph, phi: StabilityCondition, D0: MetricDivisor,
                          complex: Optional[JacobianComplex] = None) -> Representative:
    """The unique cell point whose divisor is linearly equivalent to ``D0``.

    Raises ``ValueError`` for a non-general ``phi`` or a degree mismatch.
    """
    verdict = _general(phi)
    if not verdict.general:
        raise ValueError(f"stability condition is not general (witness subset {verdict.subset})")
    if D0.degree != phi.degree:
        raise ValueError(f"divisor degree {D0.degree} != {phi.degree}")
    cx = complex if complex is not None else build_jacobian_complex(G, phi)
    target = _aj_vector(G, D0)
    pre = cx.preimages(target)
    if len(pre) != 1:
        raise RuntimeError(f"expected one preimage, found {len(pre)}")
    i, x = pre[0]
    return Representative(i, x, cx.realize(i, x))
