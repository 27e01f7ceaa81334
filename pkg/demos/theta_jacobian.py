"""Break-divisor decomposition of the Jacobian of the theta graph.

Run:  python demos/theta_jacobian.py [out.svg]
"""
import sys
from fractions import Fraction

import numpy as np

from tropijac.cli import render_svg
from tropijac.graphs import named_graph
from tropijac.stability import canonical_phi
from tropijac.tropical import MetricDivisor, MetricGraph, build_jacobian_complex, stable_representative

# %% The complex for unit lengths and the canonical condition of degree 2
theta = named_graph("theta")
M = MetricGraph(theta, [1, 1, 1])
cx = build_jacobian_complex(M, canonical_phi(2, 0, 2))
print("f-vector:", cx.to_json()["f_vector"])
print("Gram matrix:\n", np.array(M.gram, dtype=float))

for cell in cx.top_cells():
    print(f"cell {cell.index}: subdivided {cell.T}, divisor {cell.values}, volume {cx.volume(cell.index)}")
print("total volume:", sum(cx.volume(c.index) for c in cx.top_cells()))

# %% Every class has one representative: twice a midpoint reduces to v0 + v1
mid = M.point(0, Fraction(1, 2))
rep = stable_representative(M, canonical_phi(2, 0, 2), MetricDivisor.from_terms([(mid, 2)]))
print("representative of 2*midpoint(e0):", cx.cells[rep.cell].values, rep.coords)

# %% Stretch one edge and watch the volume follow det M
for ell in (2, 3, Fraction(7, 2)):
    N = MetricGraph(theta, [1, 1, ell])
    c = build_jacobian_complex(N, canonical_phi(2, 0, 2))
    vol = sum(c.volume(t.index) for t in c.top_cells())
    print(f"length {ell}: volume {vol}, det M = {np.linalg.det(np.array(N.gram, dtype=float)):.3f}")

if len(sys.argv) > 1:
    with open(sys.argv[1], "w") as fh:
        fh.write(render_svg(cx, M))
    print("wrote", sys.argv[1])
