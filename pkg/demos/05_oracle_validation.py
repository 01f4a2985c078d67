"""Validating the analytic model against the exact loop-nest simulator.

With actual-data density models every analytic count is exact; with the
uniform model, analytic expectations land on the Monte-Carlo mean of many
sampled tensors. Both comparisons run here on one small problem.
"""

import random
from collections import defaultdict

from sparsemodel import (
    ActionOptimization,
    ComputeSaf,
    LevelMapping,
    LevelSafs,
    Loop,
    Mapping,
    RankFormat,
    RepresentationFormat,
    SafSpec,
    matmul_workload,
    random_tensor,
    simulate,
    uniform,
)
from sparsemodel.arch import Architecture, ComputeLevel, StorageLevel
from sparsemodel.density import ActualDataModel, build_model
from sparsemodel.sparse import sparse_traffic

wl = matmul_workload(4, 4, 4, {"A": uniform(0.5), "B": uniform(0.5)})
arch = Architecture(
    (
        StorageLevel("L0", capacity=1 << 20, read_bandwidth=64, write_bandwidth=64, word_width=8),
        StorageLevel("L1", capacity=4096, read_bandwidth=16, write_bandwidth=16, word_width=8),
    ),
    ComputeLevel("PE", 1),
)
keep = frozenset({"A", "B", "Z"})
mapping = Mapping(
    (LevelMapping((Loop("m", 4), Loop("n", 4)), keep), LevelMapping((Loop("k", 4),), keep))
)
cp2 = RepresentationFormat((RankFormat("CP"), RankFormat("CP")))
safs = SafSpec(
    levels={"L1": LevelSafs(formats={"A": cp2}, optimizations=(ActionOptimization("skip", "B", ("A",)),))},
    compute=ComputeSaf("gate"),
)

print("== exact check with one concrete tensor pair")
rng = random.Random(7)
coords = {
    t.name: random_tensor(tuple(wl.bound(d) for d in t.projection), t.density_spec,
                          rng.getrandbits(32), t.projection).coords
    for t in wl.operands
}
models = {t: ActualDataModel((4, 4), c) for t, c in coords.items()}
exact = simulate(wl, coords, arch, mapping, safs)
analytic = sparse_traffic(wl, arch, mapping, safs, models)
worst = 0.0
for key in set(exact.table) | set(analytic.table):
    for s in ("actual", "gated", "skipped"):
        worst = max(worst, abs(exact.get(*key)[s] - analytic.get(*key)[s]))
print(f"largest |analytic - exact| over every count: {worst:.2e}")

print("\n== statistical check against 500 sampled tensors")
stat_models = {
    t.name: build_model(t.density_spec, (4, 4), t.projection) for t in wl.operands
}
expected = sparse_traffic(wl, arch, mapping, safs, stat_models)
acc = defaultdict(lambda: defaultdict(float))
N = 500
for trial in range(N):
    tensors = {
        t.name: random_tensor((4, 4), t.density_spec, rng.getrandbits(48), t.projection).coords
        for t in wl.operands
    }
    counts = simulate(wl, tensors, arch, mapping, safs)
    for key, cell in counts.table.items():
        for s, v in cell.items():
            acc[key][s] += v / N

print(f"{'entry':<38} {'model':>9} {'mc mean':>9}")
for key in sorted(expected.table, key=str):
    for s in ("actual", "gated", "skipped"):
        a = expected.get(*key)[s]
        b = acc[key][s]
        if a > 0.05 or b > 0.05:
            label = f"{key[0]}.{key[1]}.{key[2]}.{s}"
            print(f"{label:<38} {a:>9.3f} {b:>9.3f}")
