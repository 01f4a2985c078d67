"""Statistical density models: occupancy distributions of tiles.

Shows the four models answering the same question -- how many nonzeros does
a tile of a given shape hold -- and the way per-tile density spreads narrow
as tiles grow under random sparsity.
"""

from sparsemodel.density import (
    ActualDataModel,
    BandedModel,
    FixedStructuredModel,
    UniformModel,
)

print("== uniform (hypergeometric): 50% density on a 16-element vector")
m = UniformModel((16,), 0.5)
for shape in (1, 2, 4, 8):
    dist = m.occupancy_distribution((shape,))
    pmf = ", ".join(f"{k}: {p:.3f}" for k, p in dist.support)
    print(f"  fiber of {shape}: E[occ] = {dist.expected:.2f}, pmf {{{pmf}}}")

print("\n  per-tile density spread narrows as fibers grow:")
for shape in (2, 4, 8, 16):
    dist = m.occupancy_distribution((shape,))
    mean = dist.expected / shape
    var = sum(p * (k / shape - mean) ** 2 for k, p in dist.support)
    print(f"  fiber of {shape:>2}: density std = {var ** 0.5:.3f}")

print("\n== fixed structured 2:4 along a length-8 vector")
f = FixedStructuredModel((8,), 2, 4, 0)
print(f"  aligned block of 4: occupancy always {f.occupancy_distribution((4,), (0,)).support}")
print(f"  misaligned pair: {f.occupancy_distribution((2,), (0,)).support}")
print(f"  whole vector: E[occ] = {f.expected_occupancy((8,))}")

print("\n== banded, width 1 (the diagonal) on 4x4")
b = BandedModel((4, 4), 1)
print(f"  on-diagonal scalar (2,2): P(empty) = {b.prob_empty((1, 1), (2, 2))}")
print(f"  off-diagonal scalar (0,1): P(empty) = {b.prob_empty((1, 1), (0, 1))}")
print(f"  2x2 corner blocks: {[b.prob_empty((2, 2), o) for o in ((0, 0), (0, 2), (2, 0), (2, 2))]}")

print("\n== actual data: the vector [1, 0, 3, 0]")
a = ActualDataModel((4,), frozenset({(0,), (2,)}))
print(f"  whole vector E[occ] = {a.expected_occupancy((4,), (0,))}")
print(f"  per-position emptiness: {[a.prob_empty((1,), (i,)) for i in range(4)]}")
print(f"  histogram over aligned pairs: {a.occupancy_distribution((2,)).support}")
