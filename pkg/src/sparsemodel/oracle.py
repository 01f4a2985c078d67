"""Exact loop-nest simulator over concrete tensor data.

Walks the literal nested loops of a mapping and counts every storage access,
metadata access, and compute, classifying each as actual/gated/skipped.
Ground truth for the analytic model and the Monte-Carlo fidelity suite.
Deliberately brute force; refuses bounds above a configurable limit instead
of silently taking forever.

Counting conventions (the shared semantics; the counting here is by direct
enumeration, independent of the analytic formulas):
  - One compute per iteration point. Operand words feed compute from the
    innermost level keeping the tensor, one read per compute, deduplicated
    across spatial siblings served by the same instance in one step.
  - A level refills a tensor tile when a loop outside the level's subnest
    over a projected dim advances (all-or-nothing reuse; divisible tiling
    means tiles are either identical or disjoint).
  - Output partial sums: one update per compute into the innermost keeping
    level (no spatial dedup), read-modify-write reads on every slot except
    each element's structural first touch per residence (revisited tiles are
    refetched, so their first slots do read). Evictions and refetches between
    storage levels are deduplicated across spatial-reduction sibling groups.
  - Compressed formats store only nonzeros (plus RLE placeholders): absent
    words never move and are classified skipped; eliminated deliveries label
    their stored words gated or skipped per the SAF kind.
  - Decision-driving reads survive: a tensor conditioning a binding at some
    level is never eliminated there by other tensors' bindings.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .arch import Architecture
from .density import DensityModelSpec
from .errors import SpecInvariantError
from .formats import (
    ResolvedFormat,
    ResolvedRank,
    encode_tile_words,
    resolve_format,
    stored_data_words,
)
from .intersections import (
    IntersectionBinding,
    nest_weights,
    resolve_intersection_operands,
    subnest_starts,
    window_block,
)
from .mapping import Mapping, flatten_nest, require_valid, tile_extents
from .safs import SKIP, SafSpec
from .workload import Workload

ACTUAL, GATED, SKIPPED = "actual", "gated", "skipped"
STATUSES = (ACTUAL, GATED, SKIPPED)

READ, FILL, UPDATE, MDREAD, MDFILL, COMPUTE = (
    "read",
    "fill",
    "update",
    "metadata_read",
    "metadata_fill",
    "compute",
)


@dataclass(frozen=True)
class ConcreteTensor:
    shape: tuple[int, ...]
    coords: frozenset

    def __post_init__(self):
        for c in self.coords:
            if len(c) != len(self.shape) or any(x < 0 or x >= b for x, b in zip(c, self.shape)):
                raise SpecInvariantError(f"coordinate {c} outside shape {self.shape}")


@dataclass
class ExactCounts:
    """Counts per (level, tensor, action) split into actual/gated/skipped."""

    table: dict[tuple[str, str | None, str], dict[str, float]] = field(default_factory=dict)

    def add(self, level: str, tensor: str | None, action: str, status: str, amount: float = 1.0):
        if amount == 0:
            return
        cell = self.table.setdefault((level, tensor, action), dict.fromkeys(STATUSES, 0.0))
        cell[status] += amount

    def get(self, level: str, tensor: str | None, action: str) -> dict[str, float]:
        return dict(self.table.get((level, tensor, action), dict.fromkeys(STATUSES, 0.0)))

    def total(self, level: str, tensor: str | None, action: str) -> float:
        return sum(self.get(level, tensor, action).values())


def _kind_status(kind: str) -> str:
    return SKIPPED if kind == SKIP else GATED


def simulate(
    workload: Workload,
    tensors: dict[str, ConcreteTensor | frozenset],
    arch: Architecture,
    mapping: Mapping,
    safs: SafSpec | None = None,
    limit: int = 16,
) -> ExactCounts:
    """Execute the literal nested loops and count all fine-grained actions."""
    for d, b in workload.dims:
        if b > limit:
            raise SpecInvariantError(f"oracle bound limit exceeded: dim {d} = {b} > {limit}")
    require_valid(mapping, workload, arch)
    safs = safs or SafSpec()

    data: dict[str, frozenset] = {}
    for t in workload.operands:
        if t.name not in tensors:
            raise SpecInvariantError(f"missing concrete data for tensor {t.name}")
        v = tensors[t.name]
        data[t.name] = v.coords if isinstance(v, ConcreteTensor) else frozenset(v)

    nest = flatten_nest(mapping)
    n = len(nest)
    n_storage = len(arch.storage)
    starts = subnest_starts(mapping, n_storage)
    weights = nest_weights(nest, workload.dim_names)
    extents = tile_extents(mapping, workload)
    proj = {t.name: t.projection for t in workload.tensors}
    out_name = workload.output.name
    counts = ExactCounts()

    keepers = {
        t.name: [li for li in range(n_storage) if t.name in mapping.levels[li].keep]
        for t in workload.tensors
    }
    bindings = resolve_intersection_operands(safs, mapping, workload, arch)

    # resolved formats per (level, tensor), at the level's own tile shape
    rfmts: dict[tuple[int, str], ResolvedFormat] = {}
    for lname, ls in safs.levels.items():
        li = arch.storage_index(lname)
        for tname, fmt in ls.formats.items():
            ext = {d: extents[li][d] for d in proj[tname]}
            rfmts[(li, tname)] = resolve_format(fmt, proj[tname], ext)

    def sub_tile_format(level: int, tensor: str, sub_extents: tuple[int, ...]) -> ResolvedFormat | None:
        """The level's format re-resolved at a delivered sub-tile's shape,
        keeping the level's bit widths."""
        rf = rfmts.get((level, tensor))
        if rf is None:
            return None
        ext_by_dim = dict(zip(rf.projection, sub_extents))
        ranks = []
        under = 1
        rr = []
        for i in range(len(rf.ranks) - 1, -1, -1):
            rk = rf.ranks[i]
            L = math.prod(ext_by_dim[d] for d in rk.dims)
            rr.append((rk, L, under))
            under *= L
        rr.reverse()
        slots = 1
        for (rk, L, und) in rr:
            ranks.append(ResolvedRank(rk.kind, rk.dims, L, und, slots, rk.width, rk.max_run))
            slots *= L
        return ResolvedFormat(tuple(ranks), rf.projection, sub_extents, rf.compressed)

    # -- fate machinery --------------------------------------------------------

    empty_cache: dict = {}

    def block_empty(tensor: str, origin, ext) -> bool:
        key = (tensor, origin, ext)
        hit = empty_cache.get(key)
        if hit is None:
            hit = not any(
                all(o <= x < o + e for x, o, e in zip(c, origin, ext)) for c in data[tensor]
            )
            empty_cache[key] = hit
        return hit

    def binding_fires(b: IntersectionBinding, idx) -> bool:
        for cond in b.conditions:
            origin, ext = window_block(nest, weights, idx, b.window, proj[cond])
            if block_empty(cond, origin, ext):
                return True
        return False

    def chain_fate(chain: list[IntersectionBinding], idx) -> str:
        for b in chain:
            if binding_fires(b, idx):
                return _kind_status(b.kind)
        return ACTUAL

    def own_chain(tensor: str, up_to_level: int) -> list[IntersectionBinding]:
        return sorted(
            (b for b in bindings if b.target == tensor and b.level <= up_to_level),
            key=lambda b: b.level,
        )

    operand_bindings = sorted((b for b in bindings if b.target != out_name), key=lambda b: b.level)
    conditions_at: dict[int, set[str]] = {}
    for b in bindings:
        conditions_at.setdefault(b.level, set()).update(b.conditions)

    def compute_fate(idx) -> str:
        for b in operand_bindings:
            if binding_fires(b, idx):
                return _kind_status(b.kind)
        if safs.compute is not None:
            for t in workload.operands:
                c = tuple(coordinate(idx, d) for d in proj[t.name])
                if c not in data[t.name]:
                    return _kind_status(safs.compute.kind)
        return ACTUAL

    def feeding_read_fate(tensor: str, lk: int, idx) -> str:
        own = own_chain(tensor, lk)
        if tensor in conditions_at.get(lk, ()):  # decision-driving reads survive
            return chain_fate(own, idx)
        cascade = [b for b in operand_bindings if b.target != tensor]
        return chain_fate(sorted(own + cascade, key=lambda b: b.level), idx)

    # -- geometry helpers -------------------------------------------------------

    def coordinate(idx, dim: str) -> int:
        return sum(idx[i] * weights[i] for i in range(n) if nest[i].dim == dim)

    def tile_origin(idx, level: int, tensor: str) -> tuple[int, ...]:
        return tuple(
            (coordinate(idx, d) // extents[level][d]) * extents[level][d] for d in proj[tensor]
        )

    def tile_ext(level: int, tensor: str) -> tuple[int, ...]:
        return tuple(extents[level][d] for d in proj[tensor])

    def zeros_at(idx, positions) -> bool:
        return all(idx[i] == 0 for i in positions)

    def spatial_positions(tensor: str, lo: int, hi: int) -> list[int]:
        """Spatial loops at levels in [lo, hi) over dims outside the projection."""
        return [
            i
            for i in range(n)
            if nest[i].is_spatial and lo <= nest[i].level < hi and nest[i].dim not in proj[tensor]
        ]

    def instance_key(idx, level: int) -> tuple[int, ...]:
        return tuple(idx[i] for i in range(n) if nest[i].is_spatial and nest[i].level < level)

    feed_dedup = {
        t.name: spatial_positions(t.name, keepers[t.name][-1], n_storage) for t in workload.tensors
    }
    z_lk = keepers[out_name][-1]
    # loops whose advance starts a new residence of the output tile at z_lk:
    # outer temporal projected loops, and everything above one (revisits)
    z_residence_span = set()
    _seen = False
    for i in range(starts[z_lk] - 1, -1, -1):
        if nest[i].is_spatial or nest[i].factor == 1:
            continue
        if nest[i].dim in proj[out_name]:
            _seen = True
        if _seen:
            z_residence_span.add(i)
    # within a residence, these loops iterate hits on the same elements
    z_touch_positions = [
        i
        for i in range(n)
        if not nest[i].is_spatial
        and nest[i].dim not in proj[out_name]
        and i not in z_residence_span
    ]

    # element-level metadata streamed at the consuming level
    def feeding_md(tensor: str, lk: int, idx, fate: str):
        rf = rfmts.get((lk, tensor))
        if rf is None or rf.element_metadata_bits() == 0:
            return
        bits = rf.element_metadata_bits()
        lname = arch.storage[lk].name
        mdw = arch.storage[lk].md_word_width
        if rf.innermost_per_position:
            counts.add(lname, tensor, MDREAD, fate, bits / mdw)
        else:
            c = tuple(coordinate(idx, d) for d in proj[tensor])
            if c in data[tensor]:
                counts.add(lname, tensor, MDREAD, fate, bits / mdw)

    # -- residence state --------------------------------------------------------

    residence: dict = {}  # (tensor, level, instance) -> tile origin
    seen_tiles: dict = {}  # (tensor, level, instance) -> set of origins
    z_revisit: dict = {}  # instance -> was the current output residence refetched

    total_points = math.prod(lp.factor for lp in nest) if nest else 1
    idx = [0] * n

    for _ in range(total_points):
        # residences first: per-compute accounting below reads z_revisit state
        for t in workload.tensors:
            chain = keepers[t.name]
            is_out = t.name == out_name
            for pos in range(len(chain)):
                C = chain[pos]
                if pos == 0 and not is_out:
                    continue  # operands originate at the outermost keeper
                if not zeros_at(idx, range(starts[C], n)):
                    continue  # not a boundary point of C's subnest
                org = tile_origin(idx, C, t.name)
                key = (t.name, C, instance_key(idx, C))
                if residence.get(key) == org:
                    continue
                residence[key] = org
                seen = seen_tiles.setdefault(key, set())
                revisit = org in seen
                seen.add(org)
                if is_out and C == z_lk:
                    z_revisit[key[2]] = revisit
                if pos == 0:
                    continue  # outermost keeper: no parent traffic
                P = chain[pos - 1]
                pname, cname = arch.storage[P].name, arch.storage[C].name
                ext = tile_ext(C, t.name)
                size = math.prod(ext) if ext else 1
                if not is_out:
                    f = chain_fate(own_chain(t.name, P), idx)
                    # fill at C, in C's stored representation
                    rfC = rfmts.get((C, t.name))
                    mdwC = arch.storage[C].md_word_width
                    if rfC is not None and rfC.compressed:
                        stored = stored_data_words(
                            sub_tile_format(C, t.name, ext), org, data[t.name]
                        )
                        counts.add(cname, t.name, FILL, f, stored)
                        counts.add(cname, t.name, FILL, SKIPPED, size - stored)
                    else:
                        counts.add(cname, t.name, FILL, f, size)
                    if rfC is not None:
                        w, _ = encode_tile_words(
                            sub_tile_format(C, t.name, ext), ext, org, data[t.name], mdwC
                        )
                        if w:
                            counts.add(cname, t.name, MDFILL, f, w)
                    # parent read, multicast-deduplicated
                    if zeros_at(idx, spatial_positions(t.name, P, C)):
                        rfP = sub_tile_format(P, t.name, ext)
                        mdwP = arch.storage[P].md_word_width
                        if rfP is not None and rfP.compressed:
                            stored = stored_data_words(rfP, org, data[t.name])
                            counts.add(pname, t.name, READ, f, stored)
                            counts.add(pname, t.name, READ, SKIPPED, size - stored)
                        else:
                            counts.add(pname, t.name, READ, f, size)
                        if rfP is not None:
                            w, _ = encode_tile_words(rfP, ext, org, data[t.name], mdwP)
                            if w:
                                counts.add(pname, t.name, MDREAD, f, w)
                else:
                    # output: eviction up, refetch down, reduction-deduplicated
                    if zeros_at(idx, spatial_positions(t.name, P, C)):
                        zf = chain_fate(own_chain(t.name, P), idx)
                        counts.add(pname, t.name, UPDATE, zf, size)
                        if revisit:
                            counts.add(pname, t.name, READ, zf, size)
                            counts.add(cname, t.name, FILL, zf, size)

        # compute
        cf = compute_fate(idx)
        counts.add(arch.compute.name, None, COMPUTE, cf)

        # operand feeds
        for t in workload.operands:
            lk = keepers[t.name][-1]
            if not zeros_at(idx, feed_dedup[t.name]):
                continue
            lname = arch.storage[lk].name
            f = feeding_read_fate(t.name, lk, idx)
            rf = rfmts.get((lk, t.name))
            if rf is not None and rf.compressed:
                c = tuple(coordinate(idx, d) for d in proj[t.name])
                if c in data[t.name]:
                    counts.add(lname, t.name, READ, f)
                else:
                    counts.add(lname, t.name, READ, SKIPPED)
            else:
                counts.add(lname, t.name, READ, f)
            feeding_md(t.name, lk, idx, f)

        # output per-compute accounting
        zname = arch.storage[z_lk].name
        zf = chain_fate(own_chain(out_name, z_lk), idx)
        if zf == ACTUAL:
            zf = cf
        counts.add(zname, out_name, UPDATE, zf)
        if zeros_at(idx, feed_dedup[out_name]):
            touch = zeros_at(idx, z_touch_positions)
            refetched = z_revisit.get(instance_key(idx, z_lk), False)
            if not touch or refetched:
                counts.add(zname, out_name, READ, zf)

        # odometer
        for i in range(n - 1, -1, -1):
            idx[i] += 1
            if idx[i] < nest[i].factor:
                break
            idx[i] = 0

    return counts


# -- sampling ------------------------------------------------------------------


def random_tensor(
    shape: tuple[int, ...],
    spec: DensityModelSpec,
    seed: int,
    projection: tuple[str, ...] = (),
) -> ConcreteTensor:
    """Draw one concrete tensor consistent with a density model.

    uniform: exactly round(density * size) nonzeros, uniform without
    replacement; fixed_structured: n uniform positions per aligned m-block;
    banded: the deterministic band.
    """
    rng = random.Random(seed)
    size = math.prod(shape)
    cells = [()]
    for b in shape:
        cells = [c + (i,) for c in cells for i in range(b)]
    if spec.kind == "uniform":
        r = min(size, round(spec.density * size))
        return ConcreteTensor(shape, frozenset(rng.sample(cells, r)))
    if spec.kind == "fixed_structured":
        axis = projection.index(spec.dim) if projection else 0
        chosen = []
        blocks: dict[tuple, list] = {}
        for c in cells:
            key = c[:axis] + (c[axis] // spec.m,) + c[axis + 1 :]
            blocks.setdefault(key, []).append(c)
        for cells_in_block in blocks.values():
            chosen.extend(rng.sample(cells_in_block, spec.n))
        return ConcreteTensor(shape, frozenset(chosen))
    if spec.kind == "banded":
        half = math.ceil(spec.band_width / 2)
        if len(shape) != 2:
            raise SpecInvariantError("banded model requires a 2-D tensor")
        return ConcreteTensor(
            shape,
            frozenset((i, j) for i in range(shape[0]) for j in range(shape[1]) if abs(i - j) < half),
        )
    raise SpecInvariantError(f"cannot sample tensors for density model kind {spec.kind!r}")
