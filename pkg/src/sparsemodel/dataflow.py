"""Step one: dense traffic from the mapping, in closed form.

Derives per-level tile shapes, access counts (reads/fills/updates) per
tensor assuming uncompressed data and no eliminations, and the dense compute
count. Counting conventions match the exact simulator; the formulas here are
validated against it entry for entry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .arch import Architecture
from .mapping import (
    Mapping,
    TileShape,
    flatten_nest,
    require_valid,
    tile_extents,
    tile_shapes,
    validate_mapping_structure,
)
from .intersections import subnest_starts
from .workload import Workload

READ, FILL, UPDATE = "read", "fill", "update"


@dataclass(frozen=True)
class Delivery:
    """One tensor's transfer edge: parent keeper -> child keeper (or compute)."""

    tensor: str
    parent: int  # storage level index
    child: int | None  # None = compute
    count: float  # deliveries over the whole run (all instances)
    unit_words: int  # dense words per delivered unit
    multicast: int  # children sharing one parent read
    unit_extents: tuple[int, ...]  # delivered unit, projection order


@dataclass(frozen=True)
class DenseTraffic:
    entries: dict[tuple[str, str | None, str], float]  # (level, tensor, action) -> count
    compute_count: int
    deliveries: tuple[Delivery, ...]
    tile_words: dict[tuple[str, str], int]  # (level, tensor) -> dense tile words

    def get(self, level: str, tensor: str | None, action: str) -> float:
        return self.entries.get((level, tensor, action), 0.0)


def _temporal_visits(nest, boundary: int, projection) -> tuple[int, int]:
    """(visits, distinct tiles) per instance across the temporal loops outer
    than ``boundary``. Revisits arise when a loop above a projected loop
    replays inner tiles; distinct counts only projected factors."""
    visits = 1
    distinct = 1
    seen = False
    for i in range(boundary - 1, -1, -1):
        lp = nest[i]
        if lp.is_spatial or lp.factor == 1:
            continue
        if lp.dim in projection:
            visits *= lp.factor
            distinct *= lp.factor
            seen = True
        elif seen:
            visits *= lp.factor
    return visits, distinct


def _spatial_product(nest, lo: int, hi: int, projection, exclude_proj: bool) -> int:
    out = 1
    for lp in nest:
        if lp.is_spatial and lo <= lp.level < hi:
            if (lp.dim not in projection) == exclude_proj:
                out *= lp.factor
    return out


def dense_traffic(workload: Workload, arch: Architecture, mapping: Mapping) -> DenseTraffic:
    """Dense (uncompressed, elimination-free) access and compute counts."""
    require_valid(mapping, workload, arch)
    nest = flatten_nest(mapping)
    n_storage = len(arch.storage)
    starts = subnest_starts(mapping, n_storage)
    extents = tile_extents(mapping, workload)
    proj = {t.name: t.projection for t in workload.tensors}
    out_name = workload.output.name
    compute_count = workload.compute_count

    def instances(level: int) -> int:
        return _spatial_product(nest, 0, level, (), True)  # all spatial factors above

    def tile_size(level: int, tensor: str) -> int:
        return math.prod(extents[level][d] for d in proj[tensor]) if proj[tensor] else 1

    entries: dict[tuple[str, str | None, str], float] = {}
    deliveries: list[Delivery] = []
    tile_words: dict[tuple[str, str], int] = {}

    def bump(level: str, tensor: str | None, action: str, amount: float):
        if amount:
            entries[(level, tensor, action)] = entries.get((level, tensor, action), 0.0) + amount

    for t in workload.tensors:
        chain = [li for li in range(n_storage) if t.name in mapping.levels[li].keep]
        is_out = t.name == out_name
        for li in range(n_storage):
            tile_words[(arch.storage[li].name, t.name)] = tile_size(li, t.name)

        # between adjacent keepers
        for pos in range(1, len(chain)):
            P, C = chain[pos - 1], chain[pos]
            pname, cname = arch.storage[P].name, arch.storage[C].name
            visits, distinct = _temporal_visits(nest, starts[C], proj[t.name])
            inst = instances(C)
            size = tile_size(C, t.name)
            if not is_out:
                mcast = _spatial_product(nest, P, C, proj[t.name], exclude_proj=True)
                fills = visits * size * inst
                bump(cname, t.name, FILL, fills)
                bump(pname, t.name, READ, fills / mcast)
                deliveries.append(
                    Delivery(
                        t.name,
                        P,
                        C,
                        visits * inst,
                        size,
                        mcast,
                        tuple(extents[C][d] for d in proj[t.name]),
                    )
                )
            else:
                red = _spatial_product(nest, P, C, proj[t.name], exclude_proj=True)
                revisits = visits - distinct
                bump(pname, t.name, UPDATE, visits * size * inst / red)
                if revisits:
                    bump(pname, t.name, READ, revisits * size * inst / red)
                    bump(cname, t.name, FILL, revisits * size * inst / red)
                deliveries.append(
                    Delivery(
                        t.name,
                        P,
                        C,
                        visits * inst / red,
                        size,
                        1,
                        tuple(extents[C][d] for d in proj[t.name]),
                    )
                )

        # compute-feeding edge from the innermost keeper
        lk = chain[-1]
        lname = arch.storage[lk].name
        if not is_out:
            G = _spatial_product(nest, lk, n_storage, proj[t.name], exclude_proj=True)
            bump(lname, t.name, READ, compute_count / G)
            deliveries.append(
                Delivery(t.name, lk, None, compute_count / G, 1, G, tuple(1 for _ in proj[t.name]))
            )
        else:
            G = _spatial_product(nest, lk, n_storage, proj[t.name], exclude_proj=True)
            visits, distinct = _temporal_visits(nest, starts[lk], proj[t.name])
            element_instances = instances(lk) * distinct * tile_size(lk, t.name)
            bump(lname, t.name, UPDATE, compute_count)
            bump(lname, t.name, READ, compute_count / G - element_instances)
            deliveries.append(
                Delivery(t.name, lk, None, compute_count, 1, 1, tuple(1 for _ in proj[t.name]))
            )

    return DenseTraffic(entries, compute_count, tuple(deliveries), tile_words)


__all__ = [
    "DenseTraffic",
    "Delivery",
    "dense_traffic",
    "tile_shapes",
    "TileShape",
    "validate_mapping_structure",
]
