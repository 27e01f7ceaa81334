"""Divisors, universal stability conditions and (semi)stability.

A stability condition of type ``(g, n)`` assigns a rational number to every
vertex of every stable graph of that type, compatibly with contractions and
with integer total degree.  It extends to quasi-stable graphs by zero on the
exceptional vertices.

All comparisons are exact.  Subset conditions are evaluated for all
``2^|V|`` subsets at once with integer numpy arithmetic after clearing the
denominators of the stability values.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import lcm
from typing import Callable, Optional, Sequence

import numpy as np

from . import _linalg
from .graphs import (
    GraphMorphism,
    MarkedGraph,
    QuasiStableGraph,
    as_quasi_stable,
    canonical_form,
    canonical_labeling,
    contraction,
    graph_from_json,
    spanning_trees,
    stabilize,
    stable_graphs,
    quasi_stable_graphs,
    vertex_automorphisms,
)

__all__ = [
    "Divisor",
    "StabilityCondition",
    "canonical_phi",
    "zero_phi",
    "random_phi",
    "v0_basis",
    "load_phi",
    "extend_phi",
    "is_admissible",
    "SemistabilityVerdict",
    "check_semistable",
    "semistable",
    "stable",
    "GeneralityVerdict",
    "is_general",
    "generality_witnesses",
    "enumerate_semistable_divisors",
    "BreakVerdict",
    "is_break_divisor",
    "break_divisors",
    "pushforward",
]


@dataclass(frozen=True)
class Divisor:
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(x) for x in self.values))

    @property
    def degree(self) -> int:
        return sum(self.values)

    def __getitem__(self, v):
        return self.values[v]

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    @classmethod
    def from_json(cls, obj: dict, vertex_ids: Sequence) -> "Divisor":
        """Parse ``{"vertex_id": value}``; missing vertices get 0."""
        lookup = {str(v): i for i, v in enumerate(vertex_ids)}
        vals = [0] * len(vertex_ids)
        for key, x in obj.items():
            if str(key) not in lookup:
                raise ValueError(f"unknown vertex id {key!r}")
            if int(x) != x:
                raise ValueError(f"divisor value at {key!r} is not an integer")
            vals[lookup[str(key)]] = int(x)
        return cls(vals)

    def to_json(self, vertex_ids: Optional[Sequence] = None) -> dict:
        ids = range(len(self.values)) if vertex_ids is None else vertex_ids
        return {str(i): x for i, x in zip(ids, self.values)}


def _values_of(D) -> tuple:
    return tuple(D.values) if isinstance(D, Divisor) else tuple(int(x) for x in D)


# ------------------------------------------------------ stability conditions


def _canonical_position(G: MarkedGraph) -> list:
    _, order = canonical_labeling(G)
    pos = [0] * G.n_vertices
    for i, v in enumerate(order):
        pos[v] = i
    return pos


class StabilityCondition:
    """A vertex rule ``rule(G, v) -> Fraction`` on stable graphs of type ``(g, n)``.

    The rule must depend only on the isomorphism class of ``(G, v)``.  Use
    :meth:`validate` to check degree and contraction compatibility on the
    enumerated stable graphs.
    """

    def __init__(self, g: int, n: int, degree: int, rule: Callable, name: str = "custom"):
        if 2 * g - 2 + n <= 0:
            raise ValueError(f"non-hyperbolic pair ({g},{n})")
        self.g, self.n, self.degree = int(g), int(n), int(degree)
        self.rule = rule
        self.name = name
        self._cache = {}

    @property
    def type(self):
        return (self.g, self.n)

    def __repr__(self):
        return f"StabilityCondition({self.name}, g={self.g}, n={self.n}, d={self.degree})"

    def values(self, G: MarkedGraph) -> tuple:
        """``phi_G`` on a stable graph."""
        if G.type != self.type:
            raise ValueError(f"graph of type {G.type} but condition of type {self.type}")
        vals = self._cache.get(G)
        if vals is None:
            vals = tuple(Fraction(self.rule(G, v)) for v in range(G.n_vertices))
            self._cache[G] = vals
        return vals

    def extend(self, G) -> tuple:
        return extend_phi(self, G)

    def validate(self) -> list:
        """Violations of integrality, invariance, degree and compatibility."""
        bad = []
        for G in stable_graphs(self.g, self.n):
            vals = self.values(G)
            if sum(vals) != self.degree:
                bad.append(f"degree {sum(vals)} != {self.degree} on {canonical_form(G)}")
            for sigma in vertex_automorphisms(G):
                if any(vals[sigma[v]] != vals[v] for v in range(G.n_vertices)):
                    bad.append(f"not automorphism invariant on {canonical_form(G)}")
                    break
            for e in range(G.n_edges):
                pi = contraction(G, [e])
                tv = self.values(pi.target)
                if tuple(tv) != pi.pushforward(vals):
                    bad.append(f"not compatible with contracting edge {e} of {canonical_form(G)}")
        return bad

    def table(self) -> dict:
        """Values on enumerated representatives, keyed by canonical form."""
        out = {}
        for G in stable_graphs(self.g, self.n):
            pos = _canonical_position(G)
            vals = self.values(G)
            row = [None] * G.n_vertices
            for v in range(G.n_vertices):
                row[pos[v]] = vals[v]
            out[canonical_form(G)] = tuple(row)
        return out


def _check_type(g, n):
    if g < 0 or n < 0 or 2 * g - 2 + n <= 0:
        raise ValueError(f"non-hyperbolic pair ({g},{n})")


def canonical_phi(g: int, n: int, d: int) -> StabilityCondition:
    """``phi(G, v) = d (2h(v) - 2 + val(v)) / (2g - 2 + n)``."""
    _check_type(g, n)
    denom = 2 * g - 2 + n

    def rule(G, v):
        return Fraction(d * (2 * G.genus[v] - 2 + G.valence(v)), denom)

    return StabilityCondition(g, n, d, rule, name="canonical")


def zero_phi(g: int, n: int) -> StabilityCondition:
    _check_type(g, n)
    return StabilityCondition(g, n, 0, lambda G, v: Fraction(0), name="zero")


def from_table(g: int, n: int, degree: int, table: dict, name: str = "table") -> StabilityCondition:
    """Condition given by values on canonical representatives.

    ``table[canonical_form(G)][i]`` is the value at the vertex with
    canonical label ``i``.
    """
    table = {k: tuple(Fraction(x) for x in row) for k, row in table.items()}

    def rule(G, v):
        key = canonical_form(G)
        if key not in table:
            raise KeyError(f"no value for graph {key}")
        return table[key][_canonical_position(G)[v]]

    return StabilityCondition(g, n, degree, rule, name=name)


@lru_cache(maxsize=32)
def v0_basis(g: int, n: int) -> tuple:
    """Basis of the degree-0 stability conditions of type ``(g, n)``.

    Each element is a table as accepted by :func:`from_table`.  Computed
    as the rational nullspace of automorphism invariance, single-edge
    contraction compatibility and vanishing degree.
    """
    reps = stable_graphs(g, n)
    keys = [canonical_form(G) for G in reps]
    index = {k: i for i, k in enumerate(keys)}
    offset, total = [], 0
    for G in reps:
        offset.append(total)
        total += G.n_vertices
    rows = []

    def var(i, v):
        return offset[i] + v

    for i, G in enumerate(reps):
        pos = _canonical_position(G)
        for sigma in vertex_automorphisms(G):
            for v in range(G.n_vertices):
                if sigma[v] != v:
                    r = [0] * total
                    r[var(i, pos[sigma[v]])] += 1
                    r[var(i, pos[v])] -= 1
                    rows.append(r)
        for e in range(G.n_edges):
            pi = contraction(G, [e])
            H = pi.target
            j = index[canonical_form(H)]
            hpos = _canonical_position(H)
            for w in range(H.n_vertices):
                r = [0] * total
                r[var(j, hpos[w])] += 1
                for v in range(G.n_vertices):
                    if pi.vertex_map[v] == w:
                        r[var(i, pos[v])] -= 1
                rows.append(r)
        if G.n_vertices == 1:
            r = [0] * total
            r[var(i, 0)] = 1
            rows.append(r)
    basis = _linalg.nullspace(rows, total)
    out = []
    for b in basis:
        out.append({k: tuple(b[offset[i] + v] for v in range(reps[i].n_vertices))
                    for i, k in enumerate(keys)})
    return tuple(out)


def random_phi(g: int, n: int, d: int, seed: int, denominator: int = 1009,
               spread: int = 3) -> StabilityCondition:
    """``phi^can`` plus a seeded random element of the degree-0 space.

    Coefficients are ``k / denominator`` with ``|k| <= spread * denominator``.
    With ``denominator = 2`` the result is typically not general.
    """
    rng = random.Random(seed)
    base = canonical_phi(g, n, d).table()
    coeffs = [Fraction(rng.randint(-spread * denominator, spread * denominator), denominator)
              for _ in v0_basis(g, n)]
    table = {}
    for k, row in base.items():
        table[k] = tuple(x + sum((c * b[k][i] for c, b in zip(coeffs, v0_basis(g, n))), Fraction(0))
                         for i, x in enumerate(row))
    return from_table(g, n, d, table, name=f"perturbed(seed={seed})")


def load_phi(obj: dict) -> StabilityCondition:
    """Read a JSON table ``{"g","n","degree","graphs":[{"graph","values"}]}``.

    ``values`` maps vertex ids to rationals (ints or ``"p/q"`` strings).
    Raises ``ValueError`` when a stable graph is missing or a validator fails.
    """
    g, n, degree = int(obj["g"]), int(obj["n"]), int(obj["degree"])
    _check_type(g, n)
    table = {}
    for item in obj["graphs"]:
        G, vids, _ = graph_from_json(item["graph"])
        if G.type != (g, n):
            raise ValueError(f"graph of type {G.type} in a table of type {(g, n)}")
        lookup = {str(x): i for i, x in enumerate(vids)}
        vals = [Fraction(0)] * G.n_vertices
        for key, x in item["values"].items():
            vals[lookup[str(key)]] = Fraction(x)
        pos = _canonical_position(G)
        row = [None] * G.n_vertices
        for v in range(G.n_vertices):
            row[pos[v]] = vals[v]
        table[canonical_form(G)] = tuple(row)
    missing = [canonical_form(G) for G in stable_graphs(g, n) if canonical_form(G) not in table]
    if missing:
        raise ValueError(f"stability table misses {len(missing)} stable graph(s)")
    phi = from_table(g, n, degree, table, name=obj.get("name", "table"))
    bad = phi.validate()
    if bad:
        raise ValueError("invalid stability condition: " + "; ".join(bad[:3]))
    return phi


# --------------------------------------------------------- (semi)stability


def extend_phi(phi: StabilityCondition, G) -> tuple:
    """``phi_G`` on a quasi-stable graph: zero on exceptional vertices."""
    Q = as_quasi_stable(G)
    if Q.type != phi.type:
        raise ValueError(f"graph of type {Q.type} but condition of type {phi.type}")
    st = stabilize(Q)
    vals = phi.values(st.stable)
    out = [Fraction(0)] * Q.graph.n_vertices
    for v, i in st.vertex_map.items():
        out[v] = vals[i]
    return tuple(out)


def is_admissible(G, D) -> bool:
    Q = as_quasi_stable(G)
    vals = _values_of(D)
    return len(vals) == Q.graph.n_vertices and all(vals[v] == 1 for v in Q.exceptional)


@lru_cache(maxsize=64)
def _masks(nv: int) -> np.ndarray:
    k = np.arange(1 << nv, dtype=np.int64)
    return ((k[:, None] >> np.arange(nv, dtype=np.int64)) & 1).astype(np.int64)


@lru_cache(maxsize=50_000)
def _subset_data(G: MarkedGraph, exc: tuple):
    """Masks, cut sizes, and which subsets are trivial (S or S^c exceptional)."""
    B = _masks(G.n_vertices)
    cut = np.zeros(B.shape[0], dtype=np.int64)
    for a, b in G.edges:
        if a != b:
            cut += B[:, a] ^ B[:, b]
    nonexc = np.ones(G.n_vertices, dtype=np.int64)
    nonexc[list(exc)] = 0
    trivial = ((B @ nonexc) == 0) | (((1 - B) @ nonexc) == 0)
    return B, cut, trivial


def _scaled(vals: Sequence[Fraction]):
    L = lcm(*(Fraction(x).denominator for x in vals)) if vals else 1
    return L, np.array([int(Fraction(x) * L) for x in vals], dtype=np.int64)


@dataclass(frozen=True)
class SemistabilityVerdict:
    admissible: bool
    semistable: bool
    stable: bool
    witness: Optional[tuple] = None  # violating (or non-strict) subset S
    reason: str = ""

    def to_json(self, vertex_ids=None) -> dict:
        ids = vertex_ids if vertex_ids is not None else None
        w = None if self.witness is None else [ids[v] if ids else v for v in self.witness]
        return {"admissible": self.admissible, "semistable": self.semistable,
                "stable": self.stable, "witness": w, "reason": self.reason}


def _subset(mask_row) -> tuple:
    return tuple(int(v) for v in np.nonzero(mask_row)[0])


def check_semistable(G, D, phi) -> SemistabilityVerdict:
    """Full verdict for divisor ``D`` on quasi-stable ``G``.

    ``phi`` is a :class:`StabilityCondition` or a precomputed vertex vector.
    A failing witness prefers a subset whose lower inequality fails.
    """
    Q = as_quasi_stable(G)
    X = Q.graph
    vals = _values_of(D)
    pv = extend_phi(phi, Q) if isinstance(phi, StabilityCondition) else tuple(phi)
    if len(vals) != X.n_vertices:
        raise ValueError("divisor length does not match the graph")
    if not is_admissible(Q, vals):
        bad = [v for v in Q.exceptional if vals[v] != 1]
        return SemistabilityVerdict(False, False, False, (bad[0],), "not admissible")
    if sum(vals) != sum(pv):
        return SemistabilityVerdict(True, False, False, None,
                                    f"degree {sum(vals)} != {sum(pv)}")
    B, cut, trivial = _subset_data(X, Q.exceptional)
    L, P = _scaled(pv)
    dev = 2 * (L * (B @ np.array(vals, dtype=np.int64)) - B @ P)
    bound = L * cut
    low = np.nonzero(dev < -bound)[0]
    high = np.nonzero(dev > bound)[0]
    if len(low) or len(high):
        k = int(low[0]) if len(low) else int(high[0])
        side = "lower" if len(low) else "upper"
        return SemistabilityVerdict(True, False, False, _subset(B[k]), f"{side} inequality fails")
    tight = np.nonzero((np.abs(dev) == bound) & ~trivial)[0]
    if len(tight):
        return SemistabilityVerdict(True, True, False, _subset(B[int(tight[0])]),
                                    "inequality is not strict")
    return SemistabilityVerdict(True, True, True)


def semistable(G, D, phi) -> bool:
    return check_semistable(G, D, phi).semistable


def stable(G, D, phi) -> bool:
    return check_semistable(G, D, phi).stable


@dataclass(frozen=True)
class GeneralityVerdict:
    general: bool
    graph: Optional[QuasiStableGraph] = None
    subset: Optional[tuple] = None

    def __bool__(self):
        return self.general


def generality_witnesses(phi: StabilityCondition, G) -> list:
    """Subsets ``S`` of ``G`` with ``phi(S) + |E(S, S^c)|/2`` integral and
    neither ``S`` nor ``S^c`` a union of exceptional vertices."""
    Q = as_quasi_stable(G)
    B, cut, trivial = _subset_data(Q.graph, Q.exceptional)
    L, P = _scaled(extend_phi(phi, Q))
    hit = ((2 * (B @ P) + L * cut) % (2 * L) == 0) & ~trivial
    return [_subset(B[k]) for k in np.nonzero(hit)[0]]


def is_general(phi: StabilityCondition, g: Optional[int] = None, n: Optional[int] = None) -> GeneralityVerdict:
    """Generality over every quasi-stable graph of the type, with a witness."""
    g = phi.g if g is None else g
    n = phi.n if n is None else n
    if (g, n) != phi.type:
        raise ValueError("type mismatch")
    for Q in quasi_stable_graphs(g, n):
        w = generality_witnesses(phi, Q)
        if w:
            return GeneralityVerdict(False, Q, w[0])
    return GeneralityVerdict(True)


def enumerate_semistable_divisors(G, phi, only_stable: bool = False) -> list:
    """All admissible ``phi``-semistable divisors on ``G``, sorted.

    Singleton inequalities bound each non-exceptional value; the last one
    is fixed by the degree.
    """
    Q = as_quasi_stable(G)
    X = Q.graph
    pv = extend_phi(phi, Q) if isinstance(phi, StabilityCondition) else tuple(phi)
    d = sum(pv)
    if d.denominator != 1:
        raise ValueError("stability condition has non-integral degree")
    exc = set(Q.exceptional)
    free = [v for v in range(X.n_vertices) if v not in exc]
    ranges = []
    for v in free:
        c = sum(1 for a, b in X.edges if a != b and v in (a, b))
        lo = pv[v] - Fraction(c, 2)
        hi = pv[v] + Fraction(c, 2)
        ranges.append(range(_ceil(lo), _floor(hi) + 1))
    B, cut, trivial = _subset_data(X, Q.exceptional)
    L, P = _scaled(pv)
    rest = int(d) - len(exc)
    cands = []
    for combo in _product(ranges[:-1]):
        last = rest - sum(combo)
        if last in ranges[-1]:
            vec = [1] * X.n_vertices
            for v, x in zip(free, list(combo) + [last]):
                vec[v] = x
            cands.append(vec)
    if not cands:
        return []
    C = np.array(cands, dtype=np.int64)
    out = []
    for start in range(0, len(C), 4096):
        chunk = C[start:start + 4096]
        dev = 2 * (L * (B @ chunk.T) - (B @ P)[:, None])
        bound = (L * cut)[:, None]
        ok = np.all(np.abs(dev) <= bound, axis=0)
        if only_stable:
            ok &= ~np.any((np.abs(dev) == bound) & ~trivial[:, None], axis=0)
        out.extend(Divisor(row) for row in chunk[ok].tolist())
    return sorted(out, key=lambda D: D.values, reverse=True)


def _ceil(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def _floor(x: Fraction) -> int:
    return x.numerator // x.denominator


def _product(ranges):
    return itertools.product(*ranges)


# ---------------------------------------------------------- break divisors


@dataclass(frozen=True)
class BreakVerdict:
    is_break: bool
    tree: Optional[tuple] = None
    assignment: Optional[dict] = None  # co-tree edge -> vertex receiving its chip
    reason: str = ""

    def __bool__(self):
        return self.is_break


def is_break_divisor(G, D) -> BreakVerdict:
    """Search spanning trees and chip placements for a break decomposition."""
    X = G.graph if isinstance(G, QuasiStableGraph) else G
    vals = _values_of(D)
    g = X.total_genus
    if sum(vals) != g:
        return BreakVerdict(False, reason=f"degree {sum(vals)} != genus {g}")
    residual = [x - h for x, h in zip(vals, X.genus)]
    if min(residual) < 0:
        return BreakVerdict(False, reason="value below vertex genus")
    for T in spanning_trees(X):
        co = [e for e in range(X.n_edges) if e not in T]
        r = list(residual)
        assign = {}

        def place(i):
            if i == len(co):
                return all(x == 0 for x in r)
            e = co[i]
            for v in sorted(set(X.edges[e])):
                if r[v] > 0:
                    r[v] -= 1
                    assign[e] = v
                    if place(i + 1):
                        return True
                    r[v] += 1
                    del assign[e]
            return False

        if place(0):
            return BreakVerdict(True, T, dict(assign))
    return BreakVerdict(False, reason="no spanning tree decomposition")


def break_divisors(G) -> set:
    """The set of all break divisors of ``G`` (as value tuples)."""
    X = G.graph if isinstance(G, QuasiStableGraph) else G
    out = set()
    for T in spanning_trees(X):
        co = [e for e in range(X.n_edges) if e not in T]
        partial = {tuple(X.genus)}
        for e in co:
            nxt = set()
            for p in partial:
                for v in set(X.edges[e]):
                    q = list(p)
                    q[v] += 1
                    nxt.add(tuple(q))
            partial = nxt
        out |= partial
    return out


def pushforward(pi: GraphMorphism, D) -> Divisor:
    return Divisor(pi.pushforward(_values_of(D)))
