"""Which stability conditions are general?

The canonical condition of degree d in genus 2 is general exactly when
d - g + 1 and 2g - 2 are coprime; random perturbations with small
denominators usually land on a wall.
"""
from tropijac.graphs import canonical_form, quasi_stable_graphs
from tropijac.stability import (
    canonical_phi,
    enumerate_semistable_divisors,
    is_general,
    random_phi,
    v0_basis,
)

# %% Canonical conditions in genus 2
for d in range(0, 5):
    v = is_general(canonical_phi(2, 0, d))
    note = "" if v.general else f"  wall at {canonical_form(v.graph.graph)}, S={v.subset}"
    print(f"d={d}: general={v.general}{note}")

# %% Degree-0 directions available for perturbing
for g, n in [(1, 1), (2, 0), (1, 2), (0, 4), (2, 1)]:
    print(f"dim V0({g},{n}) = {len(v0_basis(g, n))}")

# %% Perturbations: count semistable divisors that fail to be stable
for seed in range(4):
    for q in (1009, 2):
        phi = random_phi(1, 2, 0, seed, denominator=q)
        loose = sum(1 for Q in quasi_stable_graphs(1, 2)
                    for D in enumerate_semistable_divisors(Q, phi)
                    if D not in enumerate_semistable_divisors(Q, phi, only_stable=True))
        print(f"seed {seed}, denominator {q}: general={is_general(phi).general}, strictly semistable={loose}")
