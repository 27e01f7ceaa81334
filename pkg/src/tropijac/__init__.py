"""Quasi-stable graphs, universal stability conditions, the categories of
quasi-stable divisors with their cone complexes, and polyhedral
decompositions of tropical Jacobians.  All arithmetic is exact."""

from .graphs import (
    GraphMorphism,
    MarkedGraph,
    QuasiStableGraph,
    canonical_form,
    classify,
    contraction,
    find_isomorphism,
    isomorphic,
    named_graph,
    quasi_stable_graphs,
    stabilize,
    stable_graphs,
)
from .stability import (
    Divisor,
    StabilityCondition,
    canonical_phi,
    check_semistable,
    is_break_divisor,
    is_general,
    random_phi,
    zero_phi,
)
from .moduli import build_poset, check_graded, enumerate_category, fiber_category
from .cones import build_complex, jacobian_cone_space, point_locate, stabilization_cone_map
from .tropical import MetricDivisor, MetricGraph, build_jacobian_complex, stable_representative

__version__ = "0.1.0"

__all__ = [
    "GraphMorphism", "MarkedGraph", "QuasiStableGraph", "canonical_form", "classify",
    "contraction", "find_isomorphism", "isomorphic", "named_graph", "quasi_stable_graphs",
    "stabilize", "stable_graphs",
    "Divisor", "StabilityCondition", "canonical_phi", "check_semistable", "is_break_divisor",
    "is_general", "random_phi", "zero_phi",
    "build_poset", "check_graded", "enumerate_category", "fiber_category",
    "build_complex", "jacobian_cone_space", "point_locate", "stabilization_cone_map",
    "MetricDivisor", "MetricGraph", "build_jacobian_complex", "stable_representative",
]
