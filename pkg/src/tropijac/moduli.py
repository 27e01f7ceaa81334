"""Finite categories of (quasi-)stable graphs with divisors and their posets.

Objects are kept as canonical representatives, one per isomorphism class.
Arrows between isomorphism classes are generated by single-edge
contractions; the full order is their transitive closure.  Morphisms
between two given objects are produced on demand as (edge subset
contraction) x (isomorphism onto the target).

Categories with unbounded degree or unbounded divisors are truncated: QD
uses a fixed degree (or a window of degrees), and the divisor values are
restricted to ``|D(S)| <= bound`` for every vertex subset ``S``.  This
truncation is closed under pushforward, so it is down-closed in the poset.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .graphs import (
    GraphMorphism,
    MarkedGraph,
    QuasiStableGraph,
    automorphisms,
    canonical_form,
    canonical_labeling,
    canonicalize,
    contraction,
    edge_action_image,
    find_isomorphism,
    graph_to_json,
    is_simple,
    quasi_stable_graphs,
    stabilize,
    stabilize_morphism,
    stable_graphs,
    subdivide,
)
from .stability import (
    StabilityCondition,
    _masks,
    check_semistable,
    enumerate_semistable_divisors,
)

__all__ = [
    "VARIANTS",
    "CatObject",
    "CategoryInstance",
    "Poset",
    "enumerate_category",
    "build_poset",
    "check_graded",
    "expected_length",
    "morphisms",
    "quotient_edge_classes",
    "FiberObject",
    "FiberArrow",
    "FiberCategory",
    "fiber_category",
    "canonical_pair",
]

VARIANTS = ("sg", "qsg", "qd", "qd-spl", "qd-phi")


def canonical_pair(G: MarkedGraph, D: Optional[Sequence[int]] = None) -> tuple:
    """``(key, representative graph, representative divisor)``."""
    colors = None if D is None else tuple(int(x) for x in D)
    key = canonical_form(G, colors)
    _, order = canonical_labeling(G, colors)
    rep = canonicalize(G, colors)
    Drep = None if D is None else tuple(colors[v] for v in order)
    return key, rep, Drep


@dataclass(frozen=True)
class CatObject:
    graph: MarkedGraph
    divisor: Optional[tuple]
    key: str

    @property
    def rank(self) -> int:
        return self.graph.n_edges

    @property
    def quasi_stable(self) -> QuasiStableGraph:
        return QuasiStableGraph.from_graph(self.graph)


def morphisms(A: MarkedGraph, B: MarkedGraph, DA=None, DB=None) -> list:
    """Every morphism ``A -> B`` (pushing ``DA`` to ``DB`` when given)."""
    k = A.n_edges - B.n_edges
    if k < 0 or A.type != B.type:
        return []
    cb = None if DB is None else tuple(DB)
    target_key = canonical_form(B, cb)
    out = []
    for S in itertools.combinations(range(A.n_edges), k):
        pi = contraction(A, S)
        H = pi.target
        ch = None if DA is None else pi.pushforward(DA)
        if canonical_form(H, ch) != target_key:
            continue
        base = find_isomorphism(H, B, ch, cb)
        for a in automorphisms(H, ch):
            out.append(pi.then(a.then(base)))
    return out


def quotient_edge_classes(morphs: Sequence[GraphMorphism]) -> dict:
    """Group morphisms by edge pullback (the arrows of the ``E`` quotient)."""
    classes = {}
    for m in morphs:
        classes.setdefault(m.edge_pullback, []).append(m)
    return dict(sorted(classes.items(), key=lambda kv: tuple(-1 if x is None else x for x in kv[0])))


@dataclass
class CategoryInstance:
    variant: str
    g: int
    n: int
    objects: list
    covers: list  # (source index, target index) single-edge contractions
    degree: Optional[int] = None
    window: Optional[tuple] = None
    phi: Optional[StabilityCondition] = None
    bound: Optional[int] = None
    index: dict = field(default_factory=dict)

    def __post_init__(self):
        self.index = {o.key: i for i, o in enumerate(self.objects)}

    def __len__(self):
        return len(self.objects)

    def find(self, G: MarkedGraph, D=None) -> int:
        return self.index[canonical_pair(G, D)[0]]

    def morphisms(self, i: int, j: int) -> list:
        A, B = self.objects[i], self.objects[j]
        return morphisms(A.graph, B.graph, A.divisor, B.divisor)

    def edge_classes(self, i: int, j: int) -> dict:
        return quotient_edge_classes(self.morphisms(i, j))

    def gluing_group(self, i: int) -> frozenset:
        o = self.objects[i]
        return edge_action_image(o.graph, o.divisor)

    def to_json(self) -> dict:
        poset = build_poset(self)
        graded, length = check_graded(poset)
        arrows = []
        for i, j in self.covers:
            for pb, ms in self.edge_classes(i, j).items():
                arrows.append({"source": i, "target": j,
                               "contracted": sorted(ms[0].contracted),
                               "pullback": list(pb),
                               "morphisms": len(ms)})
        objs = []
        for i, o in enumerate(self.objects):
            item = {"index": i, "canonical_form": o.key, "rank": o.rank,
                    "graph": graph_to_json(o.graph)}
            if o.divisor is not None:
                item["divisor"] = list(o.divisor)
            objs.append(item)
        out = {"variant": self.variant, "g": self.g, "n": self.n,
               "objects": objs, "arrows": arrows,
               "poset": {"hasse": [list(c) for c in poset.hasse], "graded": graded,
                         "length": length}}
        if self.degree is not None:
            out["degree"] = self.degree
        if self.window is not None:
            out["window"] = list(self.window)
        if self.bound is not None:
            out["bound"] = self.bound
        return out


def _check_type(g, n):
    if g < 0 or n < 0 or 2 * g - 2 + n <= 0:
        raise ValueError(f"non-hyperbolic pair ({g},{n})")


def default_bound(g: int, n: int, d: int) -> int:
    return abs(d) + 3 * g - 3 + n


def bounded_admissible_divisors(Q: QuasiStableGraph, d: int, bound: int) -> list:
    """Admissible degree-``d`` divisors with ``|D(S)| <= bound`` for all ``S``."""
    X = Q.graph
    exc = set(Q.exceptional)
    free = [v for v in range(X.n_vertices) if v not in exc]
    rest = d - len(exc)
    cands = []
    for combo in itertools.product(range(-bound, bound + 1), repeat=len(free) - 1):
        last = rest - sum(combo)
        vec = [1] * X.n_vertices
        for v, x in zip(free, list(combo) + [last]):
            vec[v] = x
        cands.append(vec)
    C = np.array(cands, dtype=np.int64)
    B = _masks(X.n_vertices)
    ok = np.all(np.abs(B @ C.T) <= bound, axis=0)
    return [tuple(r) for r in C[ok].tolist()]


def enumerate_category(variant: str, g: int, n: int, d: Optional[int] = None,
                       phi: Optional[StabilityCondition] = None,
                       window: Optional[tuple] = None,
                       bound: Optional[int] = None) -> CategoryInstance:
    """Enumerate SG, QSG, QD, QD^spl or QD(phi) up to isomorphism.

    ``qd`` and ``qd-spl`` need a degree ``d`` or a ``window = (dmin, dmax)``.
    Divisor values are truncated by ``bound`` (default ``|d| + 3g - 3 + n``)
    on every vertex subset; ``qd-phi`` needs no truncation.
    """
    _check_type(g, n)
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    pairs = []
    if variant == "sg":
        pairs = [(G, None) for G in stable_graphs(g, n)]
    elif variant == "qsg":
        pairs = [(Q.graph, None) for Q in quasi_stable_graphs(g, n)]
    elif variant == "qd-phi":
        if phi is None:
            raise ValueError("variant qd-phi needs a stability condition")
        if phi.type != (g, n):
            raise ValueError("stability condition of the wrong type")
        for Q in quasi_stable_graphs(g, n):
            pairs += [(Q.graph, D.values) for D in enumerate_semistable_divisors(Q, phi)]
        d = phi.degree
    else:
        if d is None and window is None:
            raise ValueError("missing degree window: give d or (dmin, dmax)")
        degrees = [d] if d is not None else list(range(window[0], window[1] + 1))
        for deg in degrees:
            B = default_bound(g, n, deg) if bound is None else bound
            for Q in quasi_stable_graphs(g, n):
                if variant == "qd-spl" and not is_simple(Q):
                    continue
                pairs += [(Q.graph, D) for D in bounded_admissible_divisors(Q, deg, B)]
    objs = {}
    for G, D in pairs:
        key, rep, Drep = canonical_pair(G, D)
        if key not in objs:
            objs[key] = CatObject(rep, Drep, key)
    objects = sorted(objs.values(), key=lambda o: (o.rank, o.key))
    index = {o.key: i for i, o in enumerate(objects)}
    covers = set()
    for i, o in enumerate(objects):
        for e in range(o.graph.n_edges):
            pi = contraction(o.graph, [e])
            D2 = None if o.divisor is None else pi.pushforward(o.divisor)
            key = canonical_form(pi.target, D2)
            if key not in index:
                raise RuntimeError(f"contraction left the enumerated set ({variant})")
            covers.add((i, index[key]))
    used_bound = None
    if variant in ("qd", "qd-spl"):
        used_bound = bound if bound is not None else (default_bound(g, n, d) if d is not None else None)
    return CategoryInstance(variant, g, n, objects, sorted(covers), degree=d,
                            window=None if window is None or d is not None else tuple(window),
                            phi=phi, bound=used_bound)


# ------------------------------------------------------------------ posets


@dataclass(frozen=True)
class Poset:
    """``relation`` holds ``(a, b)`` with ``a >= b`` and ``a != b``."""

    ranks: tuple
    relation: frozenset
    hasse: tuple

    def geq(self, a: int, b: int) -> bool:
        return a == b or (a, b) in self.relation

    def __len__(self):
        return len(self.ranks)


def build_poset(instance: CategoryInstance) -> Poset:
    """Order closure of the single-contraction arrows and its Hasse diagram."""
    n = len(instance.objects)
    down = [set() for _ in range(n)]
    order = sorted(range(n), key=lambda i: instance.objects[i].rank)
    succ = [[] for _ in range(n)]
    for a, b in instance.covers:
        if a != b:
            succ[a].append(b)
    for a in order:
        for b in succ[a]:
            down[a].add(b)
            down[a] |= down[b]
    relation = frozenset((a, b) for a in range(n) for b in down[a])
    hasse = []
    for a in range(n):
        for b in down[a]:
            if not any(b in down[c] for c in down[a] if c != b):
                hasse.append((a, b))
    ranks = tuple(o.rank for o in instance.objects)
    return Poset(ranks, relation, tuple(sorted(hasse)))


def check_graded(poset: Poset) -> tuple:
    """``(graded, length)``: graded means every cover raises the rank by one;
    length is the number of steps in a longest chain."""
    graded = all(poset.ranks[a] - poset.ranks[b] == 1 for a, b in poset.hasse)
    n = len(poset.ranks)
    longest = [0] * n
    below = [[] for _ in range(n)]
    for a, b in poset.hasse:
        below[a].append(b)
    for a in sorted(range(n), key=lambda i: poset.ranks[i]):
        longest[a] = max((longest[b] + 1 for b in below[a]), default=0)
    return graded, max(longest, default=0)


def expected_length(variant: str, g: int, n: int) -> int:
    if variant == "sg":
        return 3 * g - 3 + n
    if variant in ("qsg", "qd"):
        return 2 * (3 * g - 3 + n)
    if variant in ("qd-spl", "qd-phi"):
        return 4 * g - 3 + n
    raise ValueError(variant)


# --------------------------------------------------------- fiber categories


@dataclass(frozen=True)
class FiberObject:
    """Subdivided edges ``T`` of the base and the divisor on the base
    vertices; exceptional vertices carry 1 and are numbered after the base
    vertices in increasing order of ``T``."""

    base: MarkedGraph
    T: tuple
    values: tuple

    @property
    def quasi_stable(self) -> QuasiStableGraph:
        return subdivide(self.base, self.T)

    @property
    def graph(self) -> MarkedGraph:
        return self.quasi_stable.graph

    @property
    def divisor(self) -> tuple:
        return tuple(self.values) + (1,) * len(self.T)

    @property
    def dim(self) -> int:
        return len(self.T)

    def exceptional_vertex(self, e: int) -> int:
        return self.base.n_vertices + self.T.index(e)

    def rho(self) -> GraphMorphism:
        """The identification ``base -> G^st``."""
        st = stabilize(self.quasi_stable)
        hm = [None] * self.base.n_half_edges
        for e in range(self.base.n_edges):
            if e in self.T:
                f = st.exc_edge[self.exceptional_vertex(e)]
            else:
                f = st.edge_map[e]
            hm[2 * e], hm[2 * e + 1] = 2 * f, 2 * f + 1
        return GraphMorphism(self.base, st.stable, tuple(range(self.base.n_vertices)), tuple(hm))


@dataclass(frozen=True)
class FiberArrow:
    """``source -> target`` contracting, for each ``e`` in ``choice``, the
    half ``e^1`` (value 1, tail side) or ``e^2`` (value 2, head side)."""

    source: int
    target: int
    choice: tuple  # ((e, 1 or 2), ...)


@dataclass
class FiberCategory:
    base: MarkedGraph
    objects: list
    arrows: list
    index: dict

    def cells_by_dim(self) -> dict:
        out = {}
        for o in self.objects:
            out.setdefault(o.dim, []).append(o)
        return out

    def f_vector(self) -> tuple:
        top = max((o.dim for o in self.objects), default=-1)
        return tuple(sum(1 for o in self.objects if o.dim == k) for k in range(top + 1))

    def morphism_of(self, arrow: FiberArrow) -> GraphMorphism:
        """The graph morphism realizing an arrow (contract the chosen halves)."""
        src = self.objects[arrow.source]
        dst = self.objects[arrow.target]
        extra = {e: src.base.n_edges + i for i, e in enumerate(src.T)}
        S = [e if side == 1 else extra[e] for e, side in arrow.choice]
        pi = contraction(src.graph, S)
        for m in _pinned_isos(pi, src, dst):
            return pi.then(m)
        raise RuntimeError("no morphism realizes the arrow")

    def automorphism_counts(self) -> list:
        """Size of the automorphism group of each object in the fiber category."""
        counts = []
        for o in self.objects:
            Q = o.quasi_stable
            ident = o.rho()
            c = 0
            for a in automorphisms(Q.graph, o.divisor):
                ast = stabilize_morphism(a, Q, Q)
                if ident.then(ast) == ident:
                    c += 1
            counts.append(c)
        return counts


def _pinned_isos(pi: GraphMorphism, src: FiberObject, dst: FiberObject):
    """Isomorphisms ``pi.target -> dst.graph`` commuting with the base identifications."""
    H = pi.target
    D = pi.pushforward(src.divisor)
    base = find_isomorphism(H, dst.graph, D, dst.divisor)
    if base is None:
        return
    nv = src.base.n_vertices
    for a in automorphisms(H, D):
        m = a.then(base)
        full = pi.then(m)
        if all(full.vertex_map[v] == v for v in range(nv)):
            st = stabilize_morphism(full, src.quasi_stable, dst.quasi_stable)
            if src.rho().then(st) == dst.rho():
                yield m


def fiber_category(base: MarkedGraph, phi: Optional[StabilityCondition] = None,
                   predicate: Optional[Callable] = None, degree: Optional[int] = None,
                   bound: Optional[int] = None) -> FiberCategory:
    """Objects and arrows of the fiber of the forgetful-stabilization functor.

    With ``phi`` the objects are the ``phi``-semistable divisors; otherwise
    ``degree`` (and ``bound``) select admissible divisors.  ``predicate``
    filters objects further, receiving ``(QuasiStableGraph, divisor)``.
    """
    if base.n_edges and not QuasiStableGraph.from_graph(base).is_stable():
        raise ValueError("base graph must be stable")
    objects = []
    for k in range(base.n_edges + 1):
        for T in itertools.combinations(range(base.n_edges), k):
            Q = subdivide(base, T)
            if phi is not None:
                divs = [D.values for D in enumerate_semistable_divisors(Q, phi)]
            elif degree is not None:
                divs = bounded_admissible_divisors(
                    Q, degree, default_bound(*base.type, degree) if bound is None else bound)
            else:
                raise ValueError("need phi or degree")
            for D in sorted(divs, reverse=True):
                if predicate is not None and not predicate(Q, D):
                    continue
                objects.append(FiberObject(base, tuple(T), tuple(D[:base.n_vertices])))
    index = {(o.T, o.values): i for i, o in enumerate(objects)}
    arrows = []
    for i, o in enumerate(objects):
        for k in range(1, len(o.T) + 1):
            for removed in itertools.combinations(o.T, k):
                for sides in itertools.product((1, 2), repeat=k):
                    vals = list(o.values)
                    for e, s in zip(removed, sides):
                        t, h = base.edges[e]
                        vals[t if s == 1 else h] += 1
                    T2 = tuple(e for e in o.T if e not in removed)
                    j = index.get((T2, tuple(vals)))
                    if j is None:
                        raise RuntimeError("fiber category is not closed under contraction")
                    arrows.append(FiberArrow(i, j, tuple(zip(removed, sides))))
    return FiberCategory(base, objects, arrows, index)


def semistable_object(o: FiberObject, phi: StabilityCondition) -> bool:
    return check_semistable(o.quasi_stable, o.divisor, phi).semistable
