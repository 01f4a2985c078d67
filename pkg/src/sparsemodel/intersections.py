"""Leader/follower intersection bindings resolved from the mapping.

A gating/skipping SAF at storage level L eliminates deliveries of its target
(follower) tensor at L. One delivery's elimination decision covers its whole
reuse window: the span of loop iterations during which the delivered unit
(the follower's tile at the next keeping level below L, or a single word fed
to compute) stays in use. The window contains the delivered unit's own
subnest plus, scanning outward through the loops at levels at or below L,
every loop that does not advance the follower: temporal loops over
non-follower dims extend the window (stationary reuse), spatial loops over
non-follower dims extend it (multicast sharing), spatial loops over follower
dims are transparent (parallel units, separate deliveries), and the first
temporal follower-dim loop ends it.

The leader tile conditioning one delivery is the projection of the window's
iteration subspace onto the leader tensor: its extent along each leader dim
is the product of that dim's factors inside the window. Because window loops
always form the least-significant suffix of each dim's loop list, leader
tiles are aligned blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .arch import Architecture
from .errors import SpecInvariantError
from .mapping import FlatLoop, Mapping, flatten_nest
from .safs import SafSpec
from .workload import Workload


@dataclass(frozen=True)
class IntersectionBinding:
    level: int  # storage level index the SAF sits at
    kind: str  # gate | skip
    target: str  # follower tensor
    conditions: tuple[str, ...]  # leader tensor(s); any empty leader tile eliminates
    delivery_level: int | None  # next keeping level below, None = compute
    window: tuple[bool, ...]  # flattened-nest positions inside the reuse window
    leader_extents: dict[str, tuple[int, ...]]  # per condition tensor, projection order
    follower_extents: tuple[int, ...]  # delivered unit extents, projection order


def nest_weights(nest: tuple[FlatLoop, ...], dim_names) -> list[int]:
    """Mixed-radix weight of each loop: its stride in the dim's coordinate."""
    weight = [0] * len(nest)
    for d in dim_names:
        w = 1
        for i in range(len(nest) - 1, -1, -1):
            if nest[i].dim == d:
                weight[i] = w
                w *= nest[i].factor
    return weight


def _window_span(
    nest: tuple[FlatLoop, ...],
    saf_level: int,
    follower_proj: tuple[str, ...],
    unit_subnest_start: int,
) -> tuple[bool, ...]:
    n = len(nest)
    span = [i >= unit_subnest_start for i in range(n)]
    for i in range(unit_subnest_start - 1, -1, -1):
        lp = nest[i]
        if lp.level < saf_level:
            break
        if lp.is_spatial:
            if lp.dim not in follower_proj:
                span[i] = True
            continue  # spatial follower-dim loops are transparent
        if lp.dim in follower_proj and lp.factor > 1:
            break
        span[i] = True
    return tuple(span)


def _span_extents(nest, span, projection: tuple[str, ...]) -> tuple[int, ...]:
    out = []
    for d in projection:
        out.append(math.prod(nest[i].factor for i in range(len(nest)) if span[i] and nest[i].dim == d))
    return tuple(out)


def subnest_starts(mapping: Mapping, n_storage: int) -> list[int]:
    """First flattened-nest position at each storage level (monotone)."""
    nest = flatten_nest(mapping)
    starts = [len(nest)] * (n_storage + 1)
    pos = 0
    for li in range(n_storage):
        starts[li] = pos
        pos += len(mapping.levels[li].loops)
    starts[n_storage] = pos
    # a level with no loops starts where the next one does
    for li in range(n_storage - 1, -1, -1):
        starts[li] = min(starts[li], starts[li + 1])
    return starts


def resolve_intersection_operands(
    safs: SafSpec, mapping: Mapping, workload: Workload, arch: Architecture
) -> list[IntersectionBinding]:
    """Resolve every gating/skipping SAF into an intersection binding with a
    leader tile derived from the mapping's data reuse."""
    nest = flatten_nest(mapping)
    n_storage = len(arch.storage)
    starts = subnest_starts(mapping, n_storage)
    proj = {t.name: t.projection for t in workload.tensors}
    keepers = {
        t.name: [li for li in range(n_storage) if t.name in mapping.levels[li].keep]
        for t in workload.tensors
    }
    out = []
    for lname, ls in safs.levels.items():
        li = arch.storage_index(lname)
        for opt in ls.optimizations:
            chain = keepers[opt.target]
            if li not in chain:
                raise SpecInvariantError(
                    f"SAF target {opt.target} is not kept at level {lname}", entity=opt.target
                )
            for c in opt.condition_on:
                if li not in keepers[c]:
                    raise SpecInvariantError(
                        f"condition tensor {c} is not kept at level {lname}", entity=c
                    )
            pos = chain.index(li)
            child = chain[pos + 1] if pos + 1 < len(chain) else None
            unit_start = starts[child] if child is not None else len(nest)
            span = _window_span(nest, li, proj[opt.target], unit_start)
            leader_ext = {c: _span_extents(nest, span, proj[c]) for c in opt.condition_on}
            follower_ext = (
                _span_extents(nest, [i >= unit_start for i in range(len(nest))], proj[opt.target])
                if child is not None
                else tuple(1 for _ in proj[opt.target])
            )
            out.append(
                IntersectionBinding(
                    li, opt.kind, opt.target, tuple(opt.condition_on), child, span, leader_ext, follower_ext
                )
            )
    return out


def window_block(
    nest, weights, idx, window: tuple[bool, ...], projection: tuple[str, ...]
) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Origin and extents (aligned block) swept by the window containing a
    concrete iteration point, projected onto ``projection``."""
    origin = []
    extents = []
    for d in projection:
        e = 1
        o = 0
        for i in range(len(nest)):
            if nest[i].dim != d:
                continue
            if window[i]:
                e *= nest[i].factor
            else:
                o += idx[i] * weights[i]
        origin.append(o)
        extents.append(e)
    return tuple(origin), tuple(extents)
