"""Mapping: per-level loop nests, keep-sets, and coordinate-space tiling.

A mapping assigns ordered loops (dim, factor, temporal|spatial) to each
storage level and picks which tensors each level keeps. Spatial loops at a
level distribute work across that level's child instances. The flattened
nest (levels outermost -> innermost, loops in order within a level) defines
the full iteration space: each complete index assignment is one compute
operation, with the global coordinate of a dim given by the mixed-radix
combination of that dim's loops (outermost most significant).

The tile of tensor T at level L spans, for each dim in T's projection, the
product of that dim's factors at L and all inner levels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .arch import Architecture
from .errors import SpecInvariantError, SpecReferenceError
from .workload import Workload

TEMPORAL = "temporal"
SPATIAL = "spatial"


@dataclass(frozen=True)
class Loop:
    dim: str
    factor: int
    kind: str = TEMPORAL  # temporal | spatial

    def __post_init__(self):
        if self.factor < 1:
            raise SpecInvariantError(f"loop factor must be >= 1, got {self.factor}", entity=self.dim)
        if self.kind not in (TEMPORAL, SPATIAL):
            raise SpecInvariantError(f"loop kind must be temporal|spatial, got {self.kind!r}", entity=self.dim)

    @property
    def is_spatial(self) -> bool:
        return self.kind == SPATIAL


@dataclass(frozen=True)
class LevelMapping:
    loops: tuple[Loop, ...]  # outermost first within the level
    keep: frozenset[str]


@dataclass(frozen=True)
class Mapping:
    levels: tuple[LevelMapping, ...]  # one per storage level, outermost first

    def level(self, i: int) -> LevelMapping:
        return self.levels[i]

    def canonical(self) -> str:
        """Deterministic serialization, used for mapper tie-breaking."""
        parts = []
        for lm in self.levels:
            loops = ",".join(f"{lp.dim}:{lp.factor}{'s' if lp.is_spatial else 't'}" for lp in lm.loops)
            keep = "+".join(sorted(lm.keep))
            parts.append(f"[{loops}|{keep}]")
        return "".join(parts)


@dataclass(frozen=True)
class FlatLoop:
    """One loop of the flattened nest, tagged with its storage level index."""

    level: int
    dim: str
    factor: int
    is_spatial: bool


def flatten_nest(mapping: Mapping) -> tuple[FlatLoop, ...]:
    out = []
    for li, lm in enumerate(mapping.levels):
        for lp in lm.loops:
            out.append(FlatLoop(li, lp.dim, lp.factor, lp.is_spatial))
    return tuple(out)


def complete_residual_factors(mapping: Mapping, workload: Workload) -> Mapping:
    """Assign each dim's residual factor as a temporal loop at the outermost level.

    Residual loops are prepended in dim declaration order, so they sit outside
    the level's explicit loops. Non-divisible residuals are rejected.
    """
    products: dict[str, int] = {d: 1 for d in workload.dim_names}
    for lm in mapping.levels:
        for lp in lm.loops:
            if lp.dim not in products:
                raise SpecReferenceError("loop over unknown dim", entity=lp.dim)
            products[lp.dim] *= lp.factor
    residual = []
    for d, bound in workload.dims:
        have = products[d]
        if have == bound:
            continue
        if have > bound or bound % have != 0:
            raise SpecInvariantError(
                f"factors of dim {d!r} multiply to {have}, not a divisor of bound {bound}",
                entity=d,
            )
        residual.append(Loop(d, bound // have))
    if not residual:
        return mapping
    outer = mapping.levels[0]
    new_outer = LevelMapping(tuple(residual) + outer.loops, outer.keep)
    return Mapping((new_outer,) + mapping.levels[1:])


def validate_mapping_structure(mapping: Mapping, workload: Workload, arch: Architecture) -> list[str]:
    """Return a list of violation messages; empty iff the mapping is valid."""
    v: list[str] = []
    if len(mapping.levels) != len(arch.storage):
        v.append(
            f"mapping has {len(mapping.levels)} levels, architecture has {len(arch.storage)} storage levels"
        )
        return v
    bounds = workload.bounds
    tnames = {t.name for t in workload.tensors}
    products: dict[str, int] = {d: 1 for d in bounds}
    for li, lm in enumerate(mapping.levels):
        lv = arch.storage[li]
        spatial = 1
        for lp in lm.loops:
            if lp.dim not in bounds:
                v.append(f"level {lv.name}: loop over unknown dim {lp.dim!r}")
                continue
            products[lp.dim] *= lp.factor
            if lp.is_spatial:
                spatial *= lp.factor
        if spatial > lv.spatial_fanout:
            v.append(
                f"level {lv.name}: spatial factors multiply to {spatial}, exceeding fanout {lv.spatial_fanout}"
            )
        for t in lm.keep:
            if t not in tnames:
                v.append(f"level {lv.name}: keep-set names unknown tensor {t!r}")
    for d, bound in workload.dims:
        if products.get(d, 1) != bound:
            v.append(f"dim {d}: loop factors multiply to {products.get(d, 1)}, bound is {bound}")
    missing = tnames - set(mapping.levels[0].keep)
    if missing:
        v.append(f"outermost level must keep every tensor; missing {sorted(missing)}")
    for t in tnames:
        if not any(t in lm.keep for lm in mapping.levels):
            v.append(f"tensor {t} is kept at no level")
    return v


def require_valid(mapping: Mapping, workload: Workload, arch: Architecture) -> None:
    violations = validate_mapping_structure(mapping, workload, arch)
    if violations:
        raise SpecInvariantError("; ".join(violations))


# -- tiling ---------------------------------------------------------------


def tile_extents(mapping: Mapping, workload: Workload) -> list[dict[str, int]]:
    """Per storage level: extent of each dim at that level.

    extent(L, d) = product of d's factors at L and all inner levels.
    """
    n = len(mapping.levels)
    extents = [dict.fromkeys(workload.dim_names, 1) for _ in range(n)]
    for li in range(n - 1, -1, -1):
        for d in workload.dim_names:
            extents[li][d] = extents[li + 1][d] if li + 1 < n else 1
        for lp in mapping.levels[li].loops:
            extents[li][lp.dim] *= lp.factor
    return extents


@dataclass(frozen=True)
class TileShape:
    extents: tuple[tuple[str, int], ...]  # restricted to the tensor's projection

    @property
    def size(self) -> int:
        return math.prod(e for _, e in self.extents) if self.extents else 1

    def extent(self, dim: str) -> int:
        return dict(self.extents).get(dim, 1)


def tile_shapes(workload: Workload, mapping: Mapping, arch: Architecture) -> list[dict[str, TileShape]]:
    """Per level, per tensor: the tile shape resident at that level.

    At the outermost level every tile equals the full tensor; feeding the
    compute level, every tensor contributes a single word per operation.
    """
    require_valid(mapping, workload, arch)
    per_level = tile_extents(mapping, workload)
    out = []
    for ext in per_level:
        shapes = {}
        for t in workload.tensors:
            shapes[t.name] = TileShape(tuple((d, ext[d]) for d in t.projection))
        out.append(shapes)
    return out
