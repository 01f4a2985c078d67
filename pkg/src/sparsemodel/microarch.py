"""Step three: capacity validity, cycles with bandwidth throttling, energy.

Cycles are spent by actual and gated actions; skipped actions cost neither
cycles nor energy. Each storage level has separate read/write ports; the run
time is the bottleneck component's time (steady-state max-of-bottlenecks,
no phase overlap modeling). Gated accesses consume bandwidth and cycles but
are charged the gated energy entry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .arch import Architecture
from .energy import EnergyTable
from .errors import SpecInvariantError
from .problem import Problem
from .sparse import ACTUAL, GATED, SparseTraffic, sparse_traffic

READ_PORT_ACTIONS = ("read", "metadata_read")
WRITE_PORT_ACTIONS = ("fill", "update", "metadata_fill")
ENERGY_KIND = {
    "read": "read",
    "fill": "write",
    "update": "write",
    "metadata_read": "metadata_read",
    "metadata_fill": "metadata_write",
    "compute": "compute",
}

WORST, EXPECTED = "worst", "expected"


@dataclass(frozen=True)
class CapacityViolation:
    level: str
    required_bits: float
    available_bits: int

    def __str__(self):
        return (
            f"capacity exceeded at {self.level}: needs {self.required_bits:.0f} bits, "
            f"has {self.available_bits}"
        )


@dataclass(frozen=True)
class PerformanceReport:
    valid: bool
    reason: str | None
    cycles: int
    energy: float  # pJ
    energy_breakdown: dict[str, float]  # per component
    traffic: SparseTraffic | None
    utilization: dict[str, float]  # fraction of cycles each port is busy
    metadata_bits: dict[str, float]  # expected metadata footprint per level

    @property
    def edp(self) -> float:
        return self.cycles * self.energy


def check_capacity(
    arch: Architecture,
    traffic: SparseTraffic,
    keep_by_level: dict[str, frozenset[str]],
    quantile: str = WORST,
) -> list[CapacityViolation]:
    """Each level must hold its kept tiles' data words plus metadata bits."""
    if quantile not in (WORST, EXPECTED):
        raise SpecInvariantError(f"capacity quantile must be worst|expected, got {quantile!r}")
    out = []
    for lv in arch.storage:
        required = 0.0
        for tn in keep_by_level.get(lv.name, frozenset()):
            info = traffic.tile_info.get((lv.name, tn))
            if info is None:
                continue
            words = info.worst_data_words if quantile == WORST else info.expected_data_words
            bits = info.worst_metadata_bits if quantile == WORST else info.expected_metadata_bits
            required += words * lv.word_width + bits
        if required > lv.capacity:
            out.append(CapacityViolation(lv.name, required, lv.capacity))
    return out


def compute_cycles(
    traffic: SparseTraffic, arch: Architecture, charge_multicast_fanout: bool = False
) -> tuple[int, dict[str, float]]:
    """Bottleneck cycles: max over per-level ports and compute.

    Traffic totals are spread evenly over each level's active instances
    (divisible tiling keeps instances symmetric), so a port's busy time is
    total words / (instances x words-per-cycle). Compute time is actual plus
    gated operations over the active units. A multicast read normally costs
    its source one port slot; ``charge_multicast_fanout`` charges one slot
    per receiving child instead. Returns (cycles, busy times).
    """
    busy: dict[str, float] = {}
    for lv in arch.storage:
        inst = traffic.instances.get(lv.name, 1)
        r = w = 0.0
        for (level, tensor, action), cell in traffic.table.items():
            if level != lv.name:
                continue
            live = cell[ACTUAL] + cell[GATED]
            if action in READ_PORT_ACTIONS:
                r += live
            elif action in WRITE_PORT_ACTIONS:
                w += live
        if charge_multicast_fanout:
            r += traffic.multicast_extra_reads.get(lv.name, 0.0)
        busy[f"{lv.name}.read"] = r / (lv.read_bandwidth * inst)
        busy[f"{lv.name}.write"] = w / (lv.write_bandwidth * inst)
    comp = traffic.get(arch.compute.name, None, "compute")
    units = traffic.instances.get(arch.compute.name, arch.compute.num_units)
    busy[arch.compute.name] = (comp[ACTUAL] + comp[GATED]) / units
    cycles = max(1, math.ceil(max(busy.values()) - 1e-9)) if busy else 1
    return cycles, busy


def compute_energy(traffic: SparseTraffic, table: EnergyTable) -> tuple[float, dict[str, float]]:
    """Sum count x per-action energy; skipped actions contribute nothing."""
    total = 0.0
    per_component: dict[str, float] = {}
    for (level, _tensor, action), cell in traffic.table.items():
        kind = ENERGY_KIND[action]
        for status in (ACTUAL, GATED):
            count = cell[status]
            if count <= 0:
                continue
            e = count * table.lookup(level, kind, status)
            total += e
            per_component[level] = per_component.get(level, 0.0) + e
    return total, per_component


def evaluate(
    problem: Problem,
    capacity_quantile: str = WORST,
    charge_multicast_fanout: bool = False,
) -> PerformanceReport:
    """Dataflow -> sparse -> capacity -> cycles -> energy; invalid mappings
    short-circuit with the violation as the reason."""
    traffic = sparse_traffic(
        problem.workload, problem.arch, problem.mapping, problem.safs, problem.density_models()
    )
    keep = {
        problem.arch.storage[i].name: problem.mapping.levels[i].keep
        for i in range(len(problem.arch.storage))
    }
    violations = check_capacity(problem.arch, traffic, keep, capacity_quantile)
    md_bits = {
        lv.name: sum(
            traffic.tile_info[(lv.name, tn)].expected_metadata_bits
            for tn in keep[lv.name]
            if (lv.name, tn) in traffic.tile_info
        )
        for lv in problem.arch.storage
    }
    if violations:
        return PerformanceReport(
            valid=False,
            reason="; ".join(str(v) for v in violations),
            cycles=0,
            energy=0.0,
            energy_breakdown={},
            traffic=traffic,
            utilization={},
            metadata_bits=md_bits,
        )
    cycles, busy = compute_cycles(traffic, problem.arch, charge_multicast_fanout)
    energy, breakdown = compute_energy(traffic, problem.energy)
    utilization = {port: b / cycles for port, b in busy.items()}
    return PerformanceReport(
        valid=True,
        reason=None,
        cycles=cycles,
        energy=energy,
        energy_breakdown=breakdown,
        traffic=traffic,
        utilization=utilization,
        metadata_bits=md_bits,
    )
