"""Lengths of the graph posets against the dimension formulas."""
from tropijac.moduli import build_poset, check_graded, enumerate_category, expected_length
from tropijac.stability import canonical_phi, zero_phi

general = {(1, 1): zero_phi(1, 1), (2, 0): canonical_phi(2, 0, 2)}

print(f"{'type':>6} {'variant':>8} {'objects':>8} {'length':>7} {'formula':>8}")
for (g, n), phi in general.items():
    for variant in ("sg", "qsg", "qd", "qd-spl", "qd-phi"):
        kw = {"phi": phi} if variant == "qd-phi" else ({"d": 0} if variant.startswith("qd") else {})
        inst = enumerate_category(variant, g, n, **kw)
        graded, length = check_graded(build_poset(inst))
        print(f"{str((g, n)):>6} {variant:>8} {len(inst):>8} {length:>7} {expected_length(variant, g, n):>8}")
