"""Walk the fractional pipeline one stage at a time.

The solver's interesting work happens between the relaxation and the final
packing: optimize over the leveled relaxation, sample a set from the
fractional point, hand every sampled item to a single block, and pack each
block's share into its bins.  This script runs those stages by hand on one
small instance and narrates what each one produces.

    python3 demos/relaxation_walkthrough.py
"""
import random
from fractions import Fraction

from mkcp_kit import ModularObjective, MultiKnapsackConstraint
from mkcp_kit.association import block_associate
from mkcp_kit.grouping import compute_grouping, ffd_bin_pack
from mkcp_kit.hull import FreeConstraint
from mkcp_kit.rounding import greedy_instance_point, sample_set
from mkcp_kit.structuring import structure_in_blocks

weights = tuple(Fraction(w) for w in (3, 3, 2, 2, 1, 1, 1))
capacities = tuple(Fraction(4) for _ in range(6))
profits = tuple(Fraction(p) for p in (9, 8, 6, 5, 3, 2, 2))
n = len(weights)

structure = structure_in_blocks(capacities, n_level=2)
print(f"{len(capacities)} equal bins form blocks of sizes "
      f"{[b.size for b in structure.blocks]}")

spec = ModularObjective(Fraction(0), profits)
hull = FreeConstraint(n)
rng = random.Random(11)
point = greedy_instance_point(
    spec,
    range(n),
    [(weights, structure.blocks)],
    hull.cap_groups(),
    gamma=0.9,
    eps=0.05,
    steps=1,
    samples=8,
    rng=rng,
)
print(f"relaxation value {point.value:.2f}, "
      f"x = { {i: round(v, 2) for i, v in sorted(point.x.items())} }")

delta = Fraction(1, 10)
sampled = sample_set(point.x, hull, delta, rng)
print(f"sampled set (marginals damped by (1-{delta})^2): {sorted(sampled)}")

damp = 1 - delta
witnesses = [
    {i: damp * Fraction(v) for i, v in point.blocks[0][j].y.items() if v > 0}
    for j in range(len(structure.blocks))
]
association = block_associate(witnesses, weights, structure.blocks, mu=Fraction(1, 4))
for j, assigned in enumerate(association.assigned):
    print(f"block {j} owns items {sorted(assigned)}")

for j, block in enumerate(structure.blocks):
    share = sorted(association.assigned[j] & sampled)
    if not share:
        continue
    bins = ffd_bin_pack(share, weights, block.capacity)
    print(f"block {j}: packed {share} into {len(bins)} of its "
          f"{block.size} bins")
    grouping = compute_grouping(
        witnesses[j], share, weights, block.capacity, block.size, Fraction(1, 4)
    )
    print(f"         heavy groups {grouping.groups}, light {grouping.light}")
