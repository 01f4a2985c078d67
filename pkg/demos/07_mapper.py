"""Searching the mapspace for the best schedule.

Enumerates every mapping of a small matrix multiply onto a two-level
architecture, evaluates all of them under three objectives, and shows how
constraints (pinned factors, loop orders) shrink the space.
"""

from sparsemodel import (
    LevelConstraints,
    LevelMapping,
    Loop,
    Mapping,
    MapspaceConstraints,
    Objective,
    Problem,
    SafSpec,
    enumerate_mapspace,
    matmul_workload,
    search,
    uniform,
)
from sparsemodel.arch import Architecture, ComputeLevel, StorageLevel
from sparsemodel.energy import EnergyTable

wl = matmul_workload(4, 4, 4, {"A": uniform(0.5), "B": uniform(1.0)})
arch = Architecture(
    (
        StorageLevel("DRAM", capacity=1 << 22, read_bandwidth=2, write_bandwidth=2, word_width=8),
        StorageLevel("Buffer", capacity=640, read_bandwidth=8, write_bandwidth=8,
                     word_width=8, spatial_fanout=4),
    ),
    ComputeLevel("PE", 4),
)
entries = {}
for action in ("read", "write", "metadata_read", "metadata_write"):
    entries[("DRAM", action, "actual")] = 64.0
    entries[("Buffer", action, "actual")] = 1.0
entries[("PE", "compute", "actual")] = 0.5
energy = EnergyTable(entries)
placeholder = Mapping(
    (
        LevelMapping((Loop("m", 4), Loop("n", 4), Loop("k", 4)), frozenset({"A", "B", "Z"})),
        LevelMapping((), frozenset({"A", "B", "Z"})),
    )
)
template = Problem(wl, arch, SafSpec(), placeholder, energy)

space = list(enumerate_mapspace(wl, arch))
print(f"unconstrained mapspace: {len(space)} structurally valid mappings")

for objective in ("cycles", "energy", "edp"):
    result = search(template, None, Objective(objective))
    print(f"\nbest by {objective}: {result.objective_value:g}  "
          f"({result.valid} capacity-valid of {result.evaluated})")
    print(f"  mapping: {result.mapping.canonical()}")
    print(f"  cycles {result.report.cycles}, energy {result.report.energy:.1f} pJ")

constraints = MapspaceConstraints(
    levels={
        "Buffer": LevelConstraints(pinned_factors={"k": 4}),
        "DRAM": LevelConstraints(order=("m", "n")),
    }
)
constrained = list(enumerate_mapspace(wl, arch, constraints))
print(f"\nwith k pinned innermost and m before n at DRAM: {len(constrained)} mappings")
result = search(template, constraints, Objective("edp"))
print(f"constrained best edp: {result.objective_value:g}")
print(f"  mapping: {result.mapping.canonical()}")
