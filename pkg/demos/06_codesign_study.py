"""Dataflow x skipping co-design on a 64x64x64 sparse matrix multiply.

Two dataflows (reuse B on-chip vs stream B from DRAM) crossed with two
intersection placements (innermost only vs hierarchical, off-chip too),
swept over operand densities. The ranking flips with density, and the
design stacking every feature never wins alone: the reuse-everything
dataflow makes the off-chip intersection's conditioning tile so large it
almost never fires.
"""

from sparsemodel import (
    ActionOptimization,
    Architecture,
    ComputeLevel,
    ComputeSaf,
    EnergyTable,
    LevelMapping,
    LevelSafs,
    Loop,
    Mapping,
    Problem,
    RankFormat,
    RepresentationFormat,
    SafSpec,
    StorageLevel,
    evaluate,
    matmul_workload,
    uniform,
)

arch = Architecture(
    (
        StorageLevel("DRAM", capacity=10**9, read_bandwidth=8, write_bandwidth=8, word_width=8),
        StorageLevel("Buffer", capacity=4 * 10**5, read_bandwidth=64, write_bandwidth=64,
                     word_width=8, spatial_fanout=16),
    ),
    ComputeLevel("PE", 16),
)
ALL = frozenset({"A", "B", "Z"})
CP2 = RepresentationFormat((RankFormat("CP"), RankFormat("CP")))
BOTH = (
    ActionOptimization("skip", "B", ("A",)),
    ActionOptimization("skip", "A", ("B",)),
)


def mapping(dataflow):
    if dataflow == "ReuseABZ":  # whole B resident on-chip, reused across m
        return Mapping((
            LevelMapping((Loop("m", 16),), ALL),
            LevelMapping((Loop("n", 16), Loop("k", 16), Loop("m", 4, "spatial"),
                          Loop("n", 4, "spatial"), Loop("k", 4)), ALL),
        ))
    return Mapping((  # ReuseAZ: B streams from DRAM every use
        LevelMapping((Loop("m", 16), Loop("n", 16)), ALL),
        LevelMapping((Loop("k", 16), Loop("m", 4, "spatial"),
                      Loop("n", 4, "spatial"), Loop("k", 4)), frozenset({"A", "Z"})),
    ))


def safs(dataflow, hierarchical):
    if dataflow == "ReuseABZ":
        return SafSpec(levels={
            "Buffer": LevelSafs(formats={"A": CP2, "B": CP2}, optimizations=BOTH),
            "DRAM": LevelSafs(formats={"A": CP2, "B": CP2},
                              optimizations=BOTH if hierarchical else ()),
        }, compute=ComputeSaf("skip"))
    return SafSpec(levels={
        "Buffer": LevelSafs(formats={"A": CP2}),
        "DRAM": LevelSafs(formats={"A": CP2, "B": CP2},
                          optimizations=BOTH if hierarchical else ()),
    }, compute=ComputeSaf("skip"))


entries = {}
for action in ("read", "write", "metadata_read", "metadata_write"):
    entries[("DRAM", action, "actual")] = 100.0
    entries[("DRAM", action, "gated")] = 10.0
    entries[("Buffer", action, "actual")] = 1.0
    entries[("Buffer", action, "gated")] = 0.1
entries[("PE", "compute", "actual")] = 0.5
entries[("PE", "compute", "gated")] = 0.05
energy = EnergyTable(entries)

designs = {
    f"{df}.{'Hierarchical' if h else 'Innermost'}Skip": (mapping(df), safs(df, h))
    for df in ("ReuseABZ", "ReuseAZ")
    for h in (False, True)
}

densities = [1.0, 0.25, 0.01, 0.0001]
print(f"{'design':<28}" + "".join(f"{d:>12}" for d in densities) + "   (EDP, lower is better)")
table = {}
for name, (mp, sf) in designs.items():
    row = []
    for d in densities:
        wl = matmul_workload(64, 64, 64, {"A": uniform(d), "B": uniform(d)})
        rep = evaluate(Problem(wl, arch, sf, mp, energy))
        table[(name, d)] = rep.edp
        row.append(f"{rep.edp:>12.3g}")
    print(f"{name:<28}" + "".join(row))

for d in densities:
    best = min(table[(n, d)] for n in designs)
    winners = [n for n in designs if table[(n, d)] <= best * (1 + 1e-9)]
    print(f"best at density {d}: {', '.join(winners)}")
