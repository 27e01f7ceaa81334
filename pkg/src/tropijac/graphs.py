"""Vertex-weighted marked graphs, their morphisms, and stabilization.

A graph is stored with integer-indexed cells.  Vertices are ``0..V-1``;
edge ``e`` owns the two half-edges ``2e`` and ``2e + 1``, rooted at
``edges[e][0]`` and ``edges[e][1]``; the involution is ``h ^ 1``.  Legs are
listed by mark: ``legs[i]`` is the vertex carrying mark ``i + 1``.  Loops and
parallel edges are ordinary edges.
"""
from __future__ import annotations

import itertools
import json
import os
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Optional, Sequence

__all__ = [
    "MarkedGraph",
    "GraphMorphism",
    "QuasiStableGraph",
    "StabilizationData",
    "Classification",
    "classify",
    "stabilize",
    "stabilize_morphism",
    "is_simple",
    "contract",
    "contraction",
    "subdivide",
    "canonical_labeling",
    "canonical_form",
    "canonicalize",
    "isomorphic",
    "find_isomorphism",
    "isomorphisms",
    "automorphisms",
    "vertex_automorphisms",
    "edge_action_image",
    "stable_graphs",
    "quasi_stable_graphs",
    "graph_to_json",
    "graph_from_json",
    "dumps_graph",
    "named_graph",
    "max_edges",
    "spanning_trees",
    "identity",
]


def max_edges() -> int:
    """Enumeration cap on edge counts, from ``TROPIJAC_MAX_EDGES``."""
    return int(os.environ.get("TROPIJAC_MAX_EDGES", "14"))


@dataclass(frozen=True)
class MarkedGraph:
    genus: tuple
    edges: tuple
    legs: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "genus", tuple(int(h) for h in self.genus))
        object.__setattr__(self, "edges", tuple((int(a), int(b)) for a, b in self.edges))
        object.__setattr__(self, "legs", tuple(int(v) for v in self.legs))
        nv = len(self.genus)
        for a, b in self.edges:
            if not (0 <= a < nv and 0 <= b < nv):
                raise ValueError(f"edge end out of range: {(a, b)}")
        for v in self.legs:
            if not 0 <= v < nv:
                raise ValueError(f"leg vertex out of range: {v}")
        if any(h < 0 for h in self.genus):
            raise ValueError("vertex genus must be nonnegative")

    @property
    def n_vertices(self) -> int:
        return len(self.genus)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_marks(self) -> int:
        return len(self.legs)

    @property
    def n_half_edges(self) -> int:
        return 2 * len(self.edges)

    def root(self, h: int) -> int:
        return self.edges[h >> 1][h & 1]

    @staticmethod
    def involution(h: int) -> int:
        return h ^ 1

    def other_end(self, e: int, v: int) -> int:
        a, b = self.edges[e]
        return b if a == v else a

    def is_loop(self, e: int) -> bool:
        a, b = self.edges[e]
        return a == b

    def half_edges_at(self, v: int) -> list:
        return [h for h in range(2 * len(self.edges)) if self.root(h) == v]

    def legs_at(self, v: int) -> tuple:
        return tuple(i + 1 for i, w in enumerate(self.legs) if w == v)

    def valence(self, v: int) -> int:
        val = sum(1 for a, b in self.edges for x in (a, b) if x == v)
        return val + sum(1 for w in self.legs if w == v)

    def loops_at(self, v: int) -> int:
        return sum(1 for a, b in self.edges if a == b == v)

    def incident_edges(self, v: int) -> list:
        return [e for e, (a, b) in enumerate(self.edges) if v in (a, b)]

    @property
    def b1(self) -> int:
        return len(self.edges) - len(self.genus) + self.n_components()

    @property
    def total_genus(self) -> int:
        return self.b1 + sum(self.genus)

    @property
    def type(self) -> tuple:
        return (self.total_genus, self.n_marks)

    def components(self, vertices=None, edges=None) -> list:
        """Connected components (as sorted vertex lists) of a subgraph."""
        vertices = range(self.n_vertices) if vertices is None else vertices
        edges = range(self.n_edges) if edges is None else edges
        parent = {v: v for v in vertices}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for e in edges:
            a, b = self.edges[e]
            if a in parent and b in parent:
                parent[find(a)] = find(b)
        groups = {}
        for v in parent:
            groups.setdefault(find(v), []).append(v)
        return sorted(sorted(c) for c in groups.values())

    def n_components(self) -> int:
        return len(self.components()) if self.genus else 0

    def is_connected(self) -> bool:
        return self.n_components() == 1

    def adjacency(self) -> list:
        nv = self.n_vertices
        a = [[0] * nv for _ in range(nv)]
        for u, w in self.edges:
            a[u][w] += 1
            if u != w:
                a[w][u] += 1
        return a

    def relabel(self, order: Sequence[int]) -> "MarkedGraph":
        """Renumber so that new vertex ``i`` is old vertex ``order[i]``."""
        new_of = {v: i for i, v in enumerate(order)}
        return MarkedGraph(
            tuple(self.genus[v] for v in order),
            tuple((new_of[a], new_of[b]) for a, b in self.edges),
            tuple(new_of[v] for v in self.legs),
        )

    def __repr__(self):
        return f"MarkedGraph(genus={self.genus}, edges={self.edges}, legs={self.legs})"


# ---------------------------------------------------------------- morphisms


@dataclass(frozen=True)
class GraphMorphism:
    """A contraction followed by an isomorphism.

    ``halfedge_map[h]`` is the image half-edge, or ``None`` when the edge of
    ``h`` is contracted.
    """

    source: MarkedGraph
    target: MarkedGraph
    vertex_map: tuple
    halfedge_map: tuple

    @property
    def contracted(self) -> frozenset:
        return frozenset(e for e in range(self.source.n_edges) if self.halfedge_map[2 * e] is None)

    @property
    def edge_map(self) -> tuple:
        return tuple(None if self.halfedge_map[2 * e] is None else self.halfedge_map[2 * e] >> 1
                     for e in range(self.source.n_edges))

    @property
    def edge_pullback(self) -> tuple:
        """``pullback[f]`` is the source edge mapping onto target edge ``f``."""
        pb = [None] * self.target.n_edges
        for e, f in enumerate(self.edge_map):
            if f is not None:
                pb[f] = e
        return tuple(pb)

    def is_isomorphism(self) -> bool:
        return not self.contracted and self.source.n_vertices == self.target.n_vertices

    def then(self, other: "GraphMorphism") -> "GraphMorphism":
        """Composite ``other ∘ self``."""
        if other.source != self.target:
            raise ValueError("morphisms are not composable")
        vm = tuple(other.vertex_map[v] for v in self.vertex_map)
        hm = tuple(None if h is None else other.halfedge_map[h] for h in self.halfedge_map)
        return GraphMorphism(self.source, other.target, vm, hm)

    def pushforward(self, values: Sequence) -> tuple:
        out = [0] * self.target.n_vertices
        for v, x in enumerate(values):
            out[self.vertex_map[v]] += x
        return tuple(out)

    def violations(self) -> list:
        """Morphism axioms that fail; empty for a valid morphism."""
        G, H = self.source, self.target
        bad = []
        hm = self.halfedge_map
        for h in range(G.n_half_edges):
            if (hm[h] is None) != (hm[h ^ 1] is None):
                bad.append(f"half-edges of edge {h >> 1} treated differently")
            elif hm[h] is not None:
                if hm[h ^ 1] != hm[h] ^ 1:
                    bad.append(f"involution not preserved at {h}")
                if H.root(hm[h]) != self.vertex_map[G.root(h)]:
                    bad.append(f"root not preserved at {h}")
            elif self.vertex_map[G.root(h)] != self.vertex_map[G.root(h ^ 1)]:
                bad.append(f"contracted edge {h >> 1} has ends in different fibers")
        images = [x for x in hm if x is not None]
        if sorted(images) != list(range(H.n_half_edges)):
            bad.append("not a bijection onto target half-edges")
        for i, v in enumerate(G.legs):
            if self.vertex_map[v] != H.legs[i]:
                bad.append(f"leg {i + 1} not preserved")
        contracted = self.contracted
        for w in range(H.n_vertices):
            fiber = [v for v in range(G.n_vertices) if self.vertex_map[v] == w]
            if not fiber:
                bad.append(f"vertex {w} not hit")
                continue
            fe = [e for e in contracted if G.edges[e][0] in fiber]
            comps = G.components(fiber, fe)
            genus = sum(G.genus[v] for v in fiber) + len(fe) - len(fiber) + len(comps)
            if len(comps) != 1:
                bad.append(f"fiber over {w} disconnected")
            elif genus != H.genus[w]:
                bad.append(f"fiber over {w} has genus {genus}, expected {H.genus[w]}")
        return bad


def identity(G: MarkedGraph) -> GraphMorphism:
    return GraphMorphism(G, G, tuple(range(G.n_vertices)), tuple(range(G.n_half_edges)))


def contraction(G: MarkedGraph, S: Iterable[int]) -> GraphMorphism:
    """The weighted edge contraction ``G -> G/S``.

    Each connected piece of ``S`` becomes one vertex whose genus is the sum
    of the genera plus the first Betti number of the piece; a contracted loop
    therefore adds one to the genus of its vertex.
    """
    S = frozenset(S)
    comps = G.components(edges=S)
    comps.sort(key=min)
    vmap = [0] * G.n_vertices
    for i, c in enumerate(comps):
        for v in c:
            vmap[v] = i
    genus = [0] * len(comps)
    for i, c in enumerate(comps):
        inner = sum(1 for e in S if G.edges[e][0] in c)
        genus[i] = sum(G.genus[v] for v in c) + inner - len(c) + 1
    kept = [e for e in range(G.n_edges) if e not in S]
    new_edges = [(vmap[G.edges[e][0]], vmap[G.edges[e][1]]) for e in kept]
    H = MarkedGraph(genus, new_edges, [vmap[v] for v in G.legs])
    hm = [None] * G.n_half_edges
    for i, e in enumerate(kept):
        hm[2 * e], hm[2 * e + 1] = 2 * i, 2 * i + 1
    return GraphMorphism(G, H, tuple(vmap), tuple(hm))


def contract(G: MarkedGraph, S: Iterable[int]) -> MarkedGraph:
    return contraction(G, S).target


# ------------------------------------------------------- canonical labeling


def _initial_keys(G: MarkedGraph, colors) -> list:
    colors = colors if colors is not None else (0,) * G.n_vertices
    return [(G.genus[v], G.legs_at(v), colors[v], G.loops_at(v), G.valence(v))
            for v in range(G.n_vertices)]


def _ranks(keys) -> list:
    order = sorted(set(keys))
    pos = {k: i for i, k in enumerate(order)}
    return [pos[k] for k in keys]


def _refine(col, adj) -> list:
    n = len(col)
    while True:
        sig = [(col[v], tuple(sorted((col[w], adj[v][w]) for w in range(n) if w != v and adj[v][w])))
               for v in range(n)]
        new = _ranks(sig)
        if len(set(new)) == len(set(col)):
            return new
        col = new


@lru_cache(maxsize=200_000)
def canonical_labeling(G: MarkedGraph, colors: Optional[tuple] = None) -> tuple:
    """``(certificate, order)`` with ``order[i]`` the vertex given label ``i``.

    Individualization-refinement over (genus, legs, color, loops, valence)
    vertex keys; the certificate is the lexicographically least
    (keys, adjacency) pair over all leaves.  Exponential in the worst case.
    """
    keys = _initial_keys(G, colors)
    adj = G.adjacency()
    n = G.n_vertices
    best = [None, None]

    def certificate(order):
        k = tuple(keys[v] for v in order)
        a = tuple(adj[order[i]][order[j]] for i in range(n) for j in range(i, n))
        return (k, a)

    def search(col):
        col = _refine(col, adj)
        if len(set(col)) == n:
            order = tuple(sorted(range(n), key=lambda v: col[v]))
            cert = certificate(order)
            if best[0] is None or cert < best[0]:
                best[0], best[1] = cert, order
            return
        sizes = {}
        for c in col:
            sizes[c] = sizes.get(c, 0) + 1
        target = min(c for c, s in sizes.items() if s > 1)
        for v in range(n):
            if col[v] == target:
                nxt = [2 * c for c in col]
                nxt[v] -= 1
                search(nxt)

    if n:
        search(_ranks(keys))
    else:
        best = [((), ()), ()]
    return best[0], best[1]


def canonical_form(G: MarkedGraph, colors: Optional[Sequence] = None) -> str:
    """Canonical label string; equal iff the (colored) graphs are isomorphic."""
    cert, _ = canonical_labeling(G, None if colors is None else tuple(colors))
    return json.dumps(cert, separators=(",", ":"))


def isomorphic(G: MarkedGraph, H: MarkedGraph, colors_g=None, colors_h=None) -> bool:
    return canonical_form(G, colors_g) == canonical_form(H, colors_h)


def canonicalize(G: MarkedGraph, colors: Optional[Sequence] = None) -> MarkedGraph:
    """The canonical representative of the isomorphism class of ``G``.

    Vertices are renumbered by canonical label, edges sorted by their ends
    and oriented from the lower label.
    """
    _, order = canonical_labeling(G, None if colors is None else tuple(colors))
    H = G.relabel(order)
    edges = sorted((min(a, b), max(a, b)) for a, b in H.edges)
    return MarkedGraph(H.genus, edges, H.legs)


def _edge_blocks(G: MarkedGraph) -> dict:
    blocks = {}
    for e, (a, b) in enumerate(G.edges):
        blocks.setdefault((min(a, b), max(a, b)), []).append(e)
    return blocks


def _halfedge_maps(G: MarkedGraph, H: MarkedGraph, vmap: Sequence[int], first_only=False):
    """All half-edge bijections realizing the vertex bijection ``vmap``."""
    gb, hb = _edge_blocks(G), _edge_blocks(H)
    pieces = []
    for (a, b), es in sorted(gb.items()):
        key = (min(vmap[a], vmap[b]), max(vmap[a], vmap[b]))
        fs = hb.get(key, [])
        if len(fs) != len(es):
            return
        options = []
        perms = [tuple(fs)] if first_only else itertools.permutations(fs)
        for perm in perms:
            if a == b:
                flips = [(0,) * len(es)] if first_only else itertools.product((0, 1), repeat=len(es))
                for flip in flips:
                    options.append([(2 * e, 2 * f + s) for e, f, s in zip(es, perm, flip)]
                                   + [(2 * e + 1, 2 * f + 1 - s) for e, f, s in zip(es, perm, flip)])
            else:
                opt = []
                for e, f in zip(es, perm):
                    ga = G.edges[e][0]
                    at = 0 if H.edges[f][0] == vmap[ga] else 1
                    opt += [(2 * e, 2 * f + at), (2 * e + 1, 2 * f + 1 - at)]
                options.append(opt)
        pieces.append(options)
    for combo in itertools.product(*pieces):
        hm = [None] * G.n_half_edges
        for opt in combo:
            for h, x in opt:
                hm[h] = x
        yield tuple(hm)


def _vertex_automorphism_search(G: MarkedGraph, colors=None):
    """Vertex permutations preserving keys, legs and edge multiplicities.

    Candidates are pruned by the equitable refinement of the key coloring,
    which every automorphism preserves.
    """
    n = G.n_vertices
    keys = _initial_keys(G, colors)
    adj = G.adjacency()
    col = _refine(_ranks(keys), adj)
    order = sorted(range(n), key=lambda v: (sum(1 for w in range(n) if col[w] == col[v]), v))
    image = [None] * n
    used = [False] * n

    def extend(i):
        if i == n:
            yield tuple(image)
            return
        v = order[i]
        for w in range(n):
            if used[w] or col[v] != col[w]:
                continue
            if any(adj[v][order[j]] != adj[w][image[order[j]]] for j in range(i)):
                continue
            image[v], used[w] = w, True
            yield from extend(i + 1)
            image[v], used[w] = None, False

    yield from extend(0)


def find_isomorphism(G, H, colors_g=None, colors_h=None) -> Optional[GraphMorphism]:
    cg = None if colors_g is None else tuple(colors_g)
    ch = None if colors_h is None else tuple(colors_h)
    cert_g, order_g = canonical_labeling(G, cg)
    cert_h, order_h = canonical_labeling(H, ch)
    if cert_g != cert_h:
        return None
    vmap = [0] * G.n_vertices
    for a, b in zip(order_g, order_h):
        vmap[a] = b
    hm = next(_halfedge_maps(G, H, vmap, first_only=True))
    return GraphMorphism(G, H, tuple(vmap), hm)


def isomorphisms(G, H, colors_g=None, colors_h=None):
    """Generate every isomorphism ``G -> H`` (as :class:`GraphMorphism`)."""
    base = find_isomorphism(G, H, colors_g, colors_h)
    if base is None:
        return
    for a in automorphisms(G, colors_g):
        yield a.then(base)


@lru_cache(maxsize=20_000)
def vertex_automorphisms(G: MarkedGraph, colors: Optional[tuple] = None) -> tuple:
    return tuple(_vertex_automorphism_search(G, colors))


def automorphisms(G: MarkedGraph, colors: Optional[Sequence] = None) -> list:
    """All automorphisms of ``G`` (preserving ``colors`` when given)."""
    c = None if colors is None else tuple(colors)
    out = []
    for vmap in vertex_automorphisms(G, c):
        for hm in _halfedge_maps(G, G, vmap):
            out.append(GraphMorphism(G, G, vmap, hm))
    return out


def edge_action_image(G: MarkedGraph, colors: Optional[Sequence] = None) -> frozenset:
    """Image of ``Aut(G)`` (or ``Aut(G, colors)``) in the permutations of ``E(G)``.

    Each permutation ``p`` is a tuple with ``p[e]`` the image of edge ``e``.
    """
    c = None if colors is None else tuple(colors)
    perms = set()
    for vmap in vertex_automorphisms(G, c):
        blocks, targets = _edge_blocks(G), []
        for (a, b), es in sorted(blocks.items()):
            key = (min(vmap[a], vmap[b]), max(vmap[a], vmap[b]))
            targets.append((es, list(itertools.permutations(blocks[key]))))
        for combo in itertools.product(*(t[1] for t in targets)):
            p = [0] * G.n_edges
            for (es, _), perm in zip(targets, combo):
                for e, f in zip(es, perm):
                    p[e] = f
            perms.add(tuple(p))
    return frozenset(perms)


# ------------------------------------------------------ quasi-stable graphs


@dataclass(frozen=True)
class Classification:
    kind: str  # "stable", "quasi-stable" or "invalid"
    reason: str = ""

    @property
    def is_quasi_stable(self) -> bool:
        return self.kind != "invalid"


def _genus0_val2(G, v):
    return G.genus[v] == 0 and G.valence(v) == 2


def classify(G: MarkedGraph) -> Classification:
    """Quasi-stability classification; reports the first violated rule."""
    if G.n_vertices == 0:
        return Classification("invalid", "empty graph")
    if not G.is_connected():
        return Classification("invalid", "disconnected")
    g, n = G.type
    if 2 * g - 2 + n <= 0:
        return Classification("invalid", f"non-hyperbolic pair ({g},{n})")
    exc = []
    for v in range(G.n_vertices):
        if G.genus[v] == 0 and G.valence(v) < 2:
            return Classification("invalid", f"genus-0 vertex {v} has valence {G.valence(v)}")
        if _genus0_val2(G, v):
            if G.legs_at(v):
                return Classification("invalid", f"exceptional vertex {v} carries a leg")
            if G.loops_at(v):
                return Classification("invalid", f"exceptional vertex {v} carries a loop")
            exc.append(v)
    exc_set = set(exc)
    for a, b in G.edges:
        if a != b and a in exc_set and b in exc_set:
            return Classification("invalid", f"adjacent exceptional vertices {a} and {b}")
    return Classification("quasi-stable" if exc else "stable")


@dataclass(frozen=True)
class QuasiStableGraph:
    """A quasi-stable graph with an ordered pair of half-edges at each
    exceptional vertex, stored as ``exc_order = ((v, h1, h2), ...)``."""

    graph: MarkedGraph
    exc_order: tuple = field(default=())

    @classmethod
    def from_graph(cls, G: MarkedGraph, order: Optional[dict] = None) -> "QuasiStableGraph":
        """Wrap ``G``; ``order`` maps exceptional vertices to ``(h1, h2)``.

        Without ``order``, the half-edge whose opposite endpoint has the lower
        canonical label comes first (ties by half-edge id).
        """
        c = classify(G)
        if not c.is_quasi_stable:
            raise ValueError(f"not quasi-stable: {c.reason}")
        exc = [v for v in range(G.n_vertices) if _genus0_val2(G, v)]
        rank = None
        triples = []
        for v in exc:
            if order is not None and v in order:
                h1, h2 = order[v]
                if sorted((h1, h2)) != sorted(G.half_edges_at(v)):
                    raise ValueError(f"bad half-edge order at {v}")
            else:
                if rank is None:
                    rank = {u: i for i, u in enumerate(canonical_labeling(G)[1])}
                hs = sorted(G.half_edges_at(v), key=lambda h: (rank[G.root(h ^ 1)], h))
                h1, h2 = hs
            triples.append((v, h1, h2))
        return cls(G, tuple(triples))

    @property
    def exceptional(self) -> tuple:
        return tuple(t[0] for t in self.exc_order)

    @property
    def nonexceptional(self) -> tuple:
        exc = set(self.exceptional)
        return tuple(v for v in range(self.graph.n_vertices) if v not in exc)

    def pair(self, v: int) -> tuple:
        for w, h1, h2 in self.exc_order:
            if w == v:
                return (h1, h2)
        raise KeyError(v)

    def exc_edges(self, v: int) -> tuple:
        h1, h2 = self.pair(v)
        return (h1 >> 1, h2 >> 1)

    @property
    def exceptional_edges(self) -> frozenset:
        return frozenset(e for v in self.exceptional for e in self.exc_edges(v))

    @property
    def type(self) -> tuple:
        return self.graph.type

    def is_stable(self) -> bool:
        return not self.exc_order


def as_quasi_stable(G) -> QuasiStableGraph:
    return G if isinstance(G, QuasiStableGraph) else QuasiStableGraph.from_graph(G)


def is_simple(G) -> bool:
    """Whether removing the exceptional vertices leaves a connected graph."""
    Q = as_quasi_stable(G)
    keep = Q.nonexceptional
    exc = set(Q.exceptional)
    edges = [e for e, (a, b) in enumerate(Q.graph.edges) if a not in exc and b not in exc]
    return len(Q.graph.components(keep, edges)) == 1


@dataclass(frozen=True)
class StabilizationData:
    """``G^st`` with its edge dictionaries.

    ``vertex_map``: non-exceptional vertex of ``G`` -> vertex of ``G^st``;
    ``edge_map``: non-exceptional edge of ``G`` -> edge of ``G^st``;
    ``exc_edge``: exceptional vertex ``v`` -> exceptional edge ``e_v``;
    ``exc_pairs``: exceptional edge ``e_v`` -> ``(e_v^1, e_v^2)``;
    ``halfedge_map``: non-exceptional half-edge -> half-edge of ``G^st``.
    """

    source: QuasiStableGraph
    stable: MarkedGraph
    vertex_map: dict
    edge_map: dict
    exc_edge: dict
    exc_pairs: dict
    halfedge_map: dict

    def exceptional_stable_edges(self) -> frozenset:
        return frozenset(self.exc_pairs)

    def stable_edge_of(self, e: int) -> int:
        """Edge of ``G^st`` that edge ``e`` of ``G`` lies on."""
        if e in self.edge_map:
            return self.edge_map[e]
        for f, pair in self.exc_pairs.items():
            if e in pair:
                return f
        raise KeyError(e)


def stabilize(G) -> StabilizationData:
    Q = as_quasi_stable(G)
    X = Q.graph
    nex = Q.nonexceptional
    vmap = {v: i for i, v in enumerate(nex)}
    exc = set(Q.exceptional)
    edges, edge_map, hmap = [], {}, {}
    for e, (a, b) in enumerate(X.edges):
        if a in exc or b in exc:
            continue
        f = len(edges)
        edges.append((vmap[a], vmap[b]))
        edge_map[e] = f
        hmap[2 * e], hmap[2 * e + 1] = 2 * f, 2 * f + 1
    exc_edge, exc_pairs = {}, {}
    for v, h1, h2 in Q.exc_order:
        x1, x2 = h1 ^ 1, h2 ^ 1
        f = len(edges)
        edges.append((vmap[X.root(x1)], vmap[X.root(x2)]))
        hmap[x1], hmap[x2] = 2 * f, 2 * f + 1
        exc_edge[v] = f
        exc_pairs[f] = (h1 >> 1, h2 >> 1)
    st = MarkedGraph([X.genus[v] for v in nex], edges, [vmap[v] for v in X.legs])
    return StabilizationData(Q, st, vmap, edge_map, exc_edge, exc_pairs, hmap)


def stabilize_morphism(pi: GraphMorphism, Q1=None, Q2=None) -> GraphMorphism:
    """The induced morphism ``pi^st : G1^st -> G2^st``."""
    Q1 = QuasiStableGraph.from_graph(pi.source) if Q1 is None else Q1
    Q2 = QuasiStableGraph.from_graph(pi.target) if Q2 is None else Q2
    s1, s2 = stabilize(Q1), stabilize(Q2)
    exc1 = set(Q1.exceptional)
    inv1 = {x: h for h, x in s1.halfedge_map.items()}
    vm = [0] * s1.stable.n_vertices
    for v, i in s1.vertex_map.items():
        vm[i] = s2.vertex_map[pi.vertex_map[v]]
    hm = [None] * s1.stable.n_half_edges
    for x in range(s1.stable.n_half_edges):
        h = inv1[x]
        img = pi.halfedge_map[h]
        if img is None and Q1.graph.root(h ^ 1) in exc1:
            w = Q1.graph.root(h ^ 1)
            h1, h2 = Q1.pair(w)
            other = h2 if h ^ 1 == h1 else h1
            img = pi.halfedge_map[other]
        hm[x] = None if img is None else s2.halfedge_map[img]
    return GraphMorphism(s1.stable, s2.stable, tuple(vm), tuple(hm))


def subdivide(G: MarkedGraph, T: Iterable[int]) -> QuasiStableGraph:
    """Insert one exceptional vertex on each edge of ``T``.

    The subdivision vertex of edge ``e = (t, h)`` is numbered after the
    original vertices (in increasing ``e``); ``e^1`` joins ``t`` to it and
    keeps index ``e``, ``e^2`` joins it to ``h`` and is appended.
    """
    T = sorted(set(T))
    nv = G.n_vertices
    edges = list(G.edges)
    genus = list(G.genus)
    order = {}
    for i, e in enumerate(T):
        t, h = G.edges[e]
        w = nv + i
        genus.append(0)
        edges[e] = (t, w)
        edges.append((w, h))
        order[w] = (2 * e + 1, 2 * (len(edges) - 1))
    X = MarkedGraph(genus, edges, G.legs)
    return QuasiStableGraph.from_graph(X, order)


# -------------------------------------------------------------- enumeration


def _is_stable_vertex(h, val):
    return 2 * h - 2 + val > 0


def _splits(G: MarkedGraph, v: int):
    """Graphs ``G'`` with an edge ``e`` such that ``G'/e = G`` and ``e`` is not a loop."""
    hs = G.half_edges_at(v)
    ls = [i for i, w in enumerate(G.legs) if w == v]
    flags = [("h", h) for h in hs] + [("l", i) for i in ls]
    h = G.genus[v]
    new = G.n_vertices
    for mask in range(1 << len(flags)):
        side2 = [flags[i] for i in range(len(flags)) if mask >> i & 1]
        k2 = len(side2)
        k1 = len(flags) - k2
        for h2 in range(h + 1):
            h1 = h - h2
            if not (_is_stable_vertex(h1, k1 + 1) and _is_stable_vertex(h2, k2 + 1)):
                continue
            edges = [list(e) for e in G.edges]
            legs = list(G.legs)
            for kind, x in side2:
                if kind == "h":
                    edges[x >> 1][x & 1] = new
                else:
                    legs[x] = new
            edges.append([v, new])
            genus = list(G.genus) + [h2]
            genus[v] = h1
            yield MarkedGraph(genus, [tuple(e) for e in edges], legs)


def _uncontractions(G: MarkedGraph):
    for v in range(G.n_vertices):
        if G.genus[v] > 0:
            genus = list(G.genus)
            genus[v] -= 1
            yield MarkedGraph(genus, list(G.edges) + [(v, v)], G.legs)
        yield from _splits(G, v)


def _check_hyperbolic(g, n):
    if g < 0 or n < 0 or 2 * g - 2 + n <= 0:
        raise ValueError(f"non-hyperbolic pair ({g},{n})")


@lru_cache(maxsize=64)
def stable_graphs(g: int, n: int) -> tuple:
    """All stable graphs of type ``(g, n)`` up to isomorphism.

    Generated level by level in the number of edges by inverting single-edge
    contractions; each level is deduplicated by canonical form.  Returned as
    canonical representatives sorted by (edges, canonical form).
    """
    _check_hyperbolic(g, n)
    top = 3 * g - 3 + n
    if top > max_edges():
        raise ValueError(f"type ({g},{n}) needs {top} edges, above TROPIJAC_MAX_EDGES={max_edges()}")
    level = {canonical_form(G): G for G in [MarkedGraph([g], [], [0] * n)]}
    seen = dict(level)
    for _ in range(top):
        nxt = {}
        for G in level.values():
            for H in _uncontractions(G):
                k = canonical_form(H)
                if k not in nxt:
                    nxt[k] = H
        level = nxt
        seen.update(nxt)
    reps = [canonicalize(G) for G in seen.values()]
    return tuple(sorted(reps, key=lambda G: (G.n_edges, canonical_form(G))))


@lru_cache(maxsize=64)
def quasi_stable_graphs(g: int, n: int) -> tuple:
    """All quasi-stable graphs of type ``(g, n)`` up to isomorphism.

    Every such graph is a stable graph with a set of edges subdivided once.
    """
    stable = stable_graphs(g, n)
    if 2 * (3 * g - 3 + n) > max_edges():
        raise ValueError(f"quasi-stable graphs of type ({g},{n}) exceed TROPIJAC_MAX_EDGES={max_edges()}")
    out = {}
    for G in stable:
        for k in range(G.n_edges + 1):
            for T in itertools.combinations(range(G.n_edges), k):
                X = subdivide(G, T).graph
                key = canonical_form(X)
                if key not in out:
                    out[key] = canonicalize(X)
    reps = sorted(out.items(), key=lambda kv: (kv[1].n_edges, kv[0]))
    return tuple(QuasiStableGraph.from_graph(G) for _, G in reps)


# ----------------------------------------------------------------- JSON io


def graph_to_json(G: MarkedGraph) -> dict:
    return {
        "vertices": [{"id": v, "genus": h} for v, h in enumerate(G.genus)],
        "edges": [{"id": e, "half_edges": [2 * e, 2 * e + 1], "ends": [a, b]}
                  for e, (a, b) in enumerate(G.edges)],
        "legs": [{"mark": i + 1, "vertex": v} for i, v in enumerate(G.legs)],
    }


def graph_from_json(obj: dict) -> tuple:
    """Parse the JSON graph format.

    Returns ``(graph, vertex_ids, edge_ids)``; ids are kept in order of
    appearance so that output can be reported in the caller's labels.
    """
    vertex_ids = [v["id"] for v in obj["vertices"]]
    index = {vid: i for i, vid in enumerate(vertex_ids)}
    if len(index) != len(vertex_ids):
        raise ValueError("duplicate vertex id")
    genus = [int(v.get("genus", 0)) for v in obj["vertices"]]
    edge_ids, edges = [], []
    for e in obj.get("edges", []):
        a, b = e["ends"]
        edge_ids.append(e["id"])
        edges.append((index[a], index[b]))
    legs_in = sorted(obj.get("legs", []), key=lambda x: x["mark"])
    if [leg["mark"] for leg in legs_in] != list(range(1, len(legs_in) + 1)):
        raise ValueError("leg marks must be 1..n")
    legs = [index[leg["vertex"]] for leg in legs_in]
    return MarkedGraph(genus, edges, legs), vertex_ids, edge_ids


def dumps_graph(G: MarkedGraph) -> str:
    return json.dumps(graph_to_json(G), sort_keys=True, separators=(",", ":"))


_NAMED = {
    "theta": MarkedGraph([0, 0], [(0, 1), (0, 1), (0, 1)]),
    "dumbbell": MarkedGraph([0, 0], [(0, 0), (0, 1), (1, 1)]),
    "loop": MarkedGraph([0], [(0, 0)], [0]),
    "bridge": MarkedGraph([1, 1], [(0, 1)]),
    "genus1": MarkedGraph([1], [], [0]),
}


def named_graph(name: str) -> MarkedGraph:
    """Small graphs used throughout: ``theta``, ``dumbbell``, ``loop``
    (genus-0 vertex with a loop and one leg), ``bridge`` (two genus-1
    vertices joined by an edge) and ``genus1``."""
    try:
        return _NAMED[name]
    except KeyError:
        raise ValueError(f"unknown graph {name!r}; choose from {sorted(_NAMED)}") from None


def spanning_trees(G: MarkedGraph) -> list:
    """All spanning trees as sorted edge tuples, in lexicographic order."""
    nv = G.n_vertices
    candidates = [e for e in range(G.n_edges) if not G.is_loop(e)]
    out = []
    for T in itertools.combinations(candidates, nv - 1):
        parent = list(range(nv))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        ok = True
        for e in T:
            a, b = find(G.edges[e][0]), find(G.edges[e][1])
            if a == b:
                ok = False
                break
            parent[a] = b
        if ok:
            out.append(T)
    return out
