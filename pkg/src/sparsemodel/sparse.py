"""Step two: apply format and gating/skipping SAFs to the dense traffic.

Every counted action gets an ordered chain of elimination tests. A test is
"this action's reuse window projects onto condition tensor E as block T;
eliminate when T is empty", labeled gated or skipped by the SAF kind.
Chains per entry:

  - A follower's deliveries at level L answer to bindings targeting it at L
    and every outer level (outer eliminations propagate inward: the data
    never arrives). Gating propagates the gated label without removing
    inner actions' cycles; skipping removes them. The actual/eliminated
    split is kind-independent (gate <-> skip symmetry).
  - Eliminated computes elide the other operands' feeding reads, except a
    tensor conditioning a binding at its feeding level, whose
    decision-driving reads always happen.
  - Output per-compute accounting follows the compute's fate, after any
    output-targeted bindings; output tile traffic between levels answers
    only to output-targeted bindings.
  - Compression acts first: words absent from a compressed representation
    never move and are skipped before any SAF sees them.

Fraction arithmetic: within one tensor, a chain's blocks nest (windows
nest), so P(fail here, passed so far) is an exact difference of empty-block
probabilities; across tensors, placements are independent (the documented
approximation for statistical models, exact when placements really are
independent). With coordinate-dependent models (banded, actual data) the
engine enumerates the entry's slot grid and evaluates every block exactly,
reproducing the exact simulator's counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .arch import Architecture
from .dataflow import dense_traffic
from .density import DensityModel, build_model
from .formats import (
    FormatFootprint,
    RankFormat,
    RepresentationFormat,
    ResolvedFormat,
    ResolvedRank,
    encode_tile_words,
    materialize_nonzeros,
    resolve_format,
    stored_data_words,
    tensor_representation_size,
)
from .intersections import (
    IntersectionBinding,
    nest_weights,
    resolve_intersection_operands,
    subnest_starts,
    window_block,
)
from .mapping import Mapping, flatten_nest, require_valid, tile_extents
from .safs import SKIP, SafSpec, validate_safs
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
class EliminationTest:
    """One chain element: eliminate when any condition block is empty.

    A condition is (tensor, block extents, window positions); window None
    means the per-point scalar block at the slot's own coordinates.
    """

    label: str  # gated | skipped
    conditions: tuple[tuple[str, tuple[int, ...], tuple[bool, ...] | None], ...]


@dataclass(frozen=True)
class TileInfo:
    expected_data_words: float
    worst_data_words: float
    expected_metadata_bits: float
    worst_metadata_bits: float


@dataclass
class SparseTraffic:
    table: dict[tuple[str, str | None, str], dict[str, float]] = field(default_factory=dict)
    tile_info: dict[tuple[str, str], TileInfo] = field(default_factory=dict)
    # active instance count per level/compute name (spatial loop products);
    # table counts are whole-run totals across instances
    instances: dict[str, int] = field(default_factory=dict)
    # extra live read words per level if multicast reads cost one port slot
    # per receiver instead of one per group (a micro-architecture choice)
    multicast_extra_reads: dict[str, float] = field(default_factory=dict)

    def add(self, level: str, tensor: str | None, action: str, status: str, amount: float):
        if abs(amount) < 1e-15:
            return
        cell = self.table.setdefault((level, tensor, action), dict.fromkeys(STATUSES, 0.0))
        cell[status] += amount

    def get(self, level: str, tensor: str | None, action: str) -> dict[str, float]:
        return dict(self.table.get((level, tensor, action), dict.fromkeys(STATUSES, 0.0)))

    def total(self, level: str, tensor: str | None, action: str) -> float:
        return sum(self.get(level, tensor, action).values())


def chain_fractions(tests: list[EliminationTest], pe) -> dict[str, float]:
    """Actual/gated/skipped split of one slot under an ordered test chain.

    ``pe(tensor, extents, window)`` supplies the empty probability of the
    conditioning block. Per tensor, the running state is the smallest block
    tested so far and its nonzero probability; nested blocks compose
    exactly, crossing blocks multiply independently.
    """
    frac = dict.fromkeys(STATUSES, 0.0)
    state: dict[str, tuple[tuple[int, ...], float]] = {}

    def survive() -> float:
        out = 1.0
        for _, p in state.values():
            out *= p
        return out

    for test in tests:
        before = survive()
        for tensor, extents, window in test.conditions:
            pnz = 1.0 - pe(tensor, extents, window)
            if tensor not in state:
                state[tensor] = (extents, pnz)
                continue
            tile, p = state[tensor]
            if all(e <= t for e, t in zip(extents, tile)):
                state[tensor] = (extents, pnz)
            elif all(e >= t for e, t in zip(extents, tile)):
                pass  # contains an already-tested block: passes for free
            else:
                state[tensor] = (tuple(min(e, t) for e, t in zip(extents, tile)), p * pnz)
        after = survive()
        frac[test.label] += max(0.0, before - after)
    frac[ACTUAL] = survive()
    return frac


def per_tile_action_breakdown(
    tests: list[EliminationTest], models: dict[str, DensityModel]
) -> dict[str, float]:
    """Coordinate-independent per-slot fractions from block statistics."""
    return chain_fractions(tests, lambda t, ext, _w: models[t].prob_empty(ext))


class SparseAnalysis:
    """Assembles test chains per traffic entry, evaluates fractions, and
    scales by dense counts (traffic post-processing)."""

    def __init__(
        self,
        workload: Workload,
        arch: Architecture,
        mapping: Mapping,
        safs: SafSpec,
        models: dict[str, DensityModel],
    ):
        require_valid(mapping, workload, arch)
        validate_safs(
            safs,
            workload,
            arch,
            {arch.storage[i].name: mapping.levels[i].keep for i in range(len(arch.storage))},
        )
        self.workload = workload
        self.arch = arch
        self.mapping = mapping
        self.safs = safs
        self.models = models
        self.nest = flatten_nest(mapping)
        self.n = len(self.nest)
        self.n_storage = len(arch.storage)
        self.starts = subnest_starts(mapping, self.n_storage)
        self.weights = nest_weights(self.nest, workload.dim_names)
        self.extents = tile_extents(mapping, workload)
        self.proj = {t.name: t.projection for t in workload.tensors}
        self.out = workload.output.name
        self.bindings = resolve_intersection_operands(safs, mapping, workload, arch)
        self.keepers = {
            t.name: [li for li in range(self.n_storage) if t.name in mapping.levels[li].keep]
            for t in workload.tensors
        }
        self.rfmts: dict[tuple[int, str], ResolvedFormat] = {}
        for lname, ls in safs.levels.items():
            li = arch.storage_index(lname)
            for tname, fmt in ls.formats.items():
                ext = {d: self.extents[li][d] for d in self.proj[tname]}
                self.rfmts[(li, tname)] = resolve_format(fmt, self.proj[tname], ext)
        self.conditions_at: dict[int, set[str]] = {}
        for b in self.bindings:
            self.conditions_at.setdefault(b.level, set()).update(b.conditions)
        self.dense = dense_traffic(workload, arch, mapping)
        self._concrete: dict[str, frozenset] = {}

    # -- chains -----------------------------------------------------------------

    def _test(self, b: IntersectionBinding) -> EliminationTest:
        label = SKIPPED if b.kind == SKIP else GATED
        return EliminationTest(label, tuple((c, b.leader_extents[c], b.window) for c in b.conditions))

    def _own_tests(self, tensor: str, up_to: int) -> list[EliminationTest]:
        sel = sorted(
            (b for b in self.bindings if b.target == tensor and b.level <= up_to),
            key=lambda b: b.level,
        )
        return [self._test(b) for b in sel]

    def _mac_tests(self) -> list[EliminationTest]:
        tests = [
            self._test(b)
            for b in sorted((b for b in self.bindings if b.target != self.out), key=lambda b: b.level)
        ]
        if self.safs.compute is not None:
            label = SKIPPED if self.safs.compute.kind == SKIP else GATED
            for t in self.workload.operands:
                tests.append(EliminationTest(label, ((t.name, tuple(1 for _ in self.proj[t.name]), None),)))
        return tests

    def _feeding_tests(self, tensor: str, lk: int) -> list[EliminationTest]:
        own = [b for b in self.bindings if b.target == tensor]
        if tensor in self.conditions_at.get(lk, ()):
            sel = own  # decision-driving reads survive other eliminations
        else:
            sel = own + [b for b in self.bindings if b.target not in (tensor, self.out)]
        return [self._test(b) for b in sorted(sel, key=lambda b: b.level)]

    def _compression_test(self, tensor: str) -> EliminationTest:
        return EliminationTest(SKIPPED, ((tensor, tuple(1 for _ in self.proj[tensor]), None),))

    # -- fraction evaluation ------------------------------------------------------

    def _coordinate_dependent(self, tests, extra: tuple[str, ...] = ()) -> bool:
        names = {c[0] for t in tests for c in t.conditions} | set(extra)
        return any(self.models[nm].coordinate_dependent for nm in names if nm in self.models)

    def _concrete_coords(self, tensor: str) -> frozenset:
        if tensor not in self._concrete:
            self._concrete[tensor] = materialize_nonzeros(self.models[tensor])
        return self._concrete[tensor]

    def _pe_block(self, tensor: str, origin: tuple[int, ...], ext: tuple[int, ...]) -> float:
        model = self.models[tensor]
        if model.coordinate_dependent:
            coords = self._concrete_coords(tensor)
            hit = any(all(o <= x < o + e for x, o, e in zip(c, origin, ext)) for c in coords)
            return 0.0 if hit else 1.0
        return model.prob_empty(ext)

    def _point_coord(self, idx, tensor: str) -> tuple[int, ...]:
        return tuple(
            sum(idx[i] * self.weights[i] for i in range(self.n) if self.nest[i].dim == d)
            for d in self.proj[tensor]
        )

    def _fractions_at(self, tests, idx) -> dict[str, float]:
        def pe(tensor, extents, window):
            if window is None:
                return self._pe_block(tensor, self._point_coord(idx, tensor), extents)
            origin, ext = window_block(self.nest, self.weights, idx, window, self.proj[tensor])
            return self._pe_block(tensor, origin, ext)

        return chain_fractions(tests, pe)

    def _enumerate(self, positions):
        idx = [0] * self.n
        if not positions:
            yield idx
            return
        total = math.prod(self.nest[i].factor for i in positions)
        for _ in range(total):
            yield idx
            for i in reversed(positions):
                idx[i] += 1
                if idx[i] < self.nest[i].factor:
                    break
                idx[i] = 0

    def _avg_fractions(self, tests, positions) -> dict[str, float]:
        acc = dict.fromkeys(STATUSES, 0.0)
        cnt = 0
        for idx in self._enumerate(positions):
            f = self._fractions_at(tests, idx)
            for s in STATUSES:
                acc[s] += f[s]
            cnt += 1
        return {s: acc[s] / cnt for s in STATUSES}

    def _fractions(self, tests, positions, extra: tuple[str, ...] = ()) -> dict[str, float]:
        if not tests:
            return {ACTUAL: 1.0, GATED: 0.0, SKIPPED: 0.0}
        if self._coordinate_dependent(tests, extra):
            return self._avg_fractions(tests, positions)
        return per_tile_action_breakdown(tests, self.models)

    @staticmethod
    def _live(st: SparseTraffic, level: str, tensor: str, action: str) -> float:
        cell = st.get(level, tensor, action)
        return cell[ACTUAL] + cell[GATED]

    # -- slot grids ----------------------------------------------------------------

    def _residence_span(self, tensor: str, child: int) -> list[int]:
        """Loops whose advance starts a new residence of the tensor's tile
        at `child`: outer temporal projected loops and everything above one."""
        span = []
        seen = False
        for i in range(self.starts[child] - 1, -1, -1):
            lp = self.nest[i]
            if lp.is_spatial or lp.factor == 1:
                continue
            if lp.dim in self.proj[tensor]:
                seen = True
            if seen:
                span.append(i)
        return span

    def _delivery_slots(self, tensor: str, child: int) -> list[int]:
        spatial = [i for i in range(self.n) if self.nest[i].is_spatial and self.nest[i].level < child]
        return sorted(self._residence_span(tensor, child) + spatial)

    def _feed_slots(self, tensor: str) -> list[int]:
        lk = self.keepers[tensor][-1]
        return [
            i
            for i in range(self.n)
            if not (
                self.nest[i].is_spatial
                and self.nest[i].level >= lk
                and self.nest[i].dim not in self.proj[tensor]
            )
        ]

    # -- emission -------------------------------------------------------------------

    def run(self) -> SparseTraffic:
        st = SparseTraffic()
        spatial = [1] * (self.n_storage + 1)
        for lp in self.nest:
            if lp.is_spatial:
                spatial[lp.level + 1] *= lp.factor
        acc = 1
        for li in range(self.n_storage):
            acc *= spatial[li]
            st.instances[self.arch.storage[li].name] = acc
        st.instances[self.arch.compute.name] = acc * spatial[self.n_storage]
        mac_tests = self._mac_tests()
        mac_frac = self._fractions(mac_tests, list(range(self.n)))
        for s in STATUSES:
            st.add(self.arch.compute.name, None, COMPUTE, s, self.dense.compute_count * mac_frac[s])
        for t in self.workload.tensors:
            if t.name == self.out:
                self._emit_output(st, mac_tests)
            else:
                self._emit_operand(st, t.name)
        self._tile_footprints(st)
        return st

    def _emit_operand(self, st: SparseTraffic, tn: str):
        arch = self.arch
        chain = self.keepers[tn]

        for pos in range(1, len(chain)):
            P, C = chain[pos - 1], chain[pos]
            ext = tuple(self.extents[C][d] for d in self.proj[tn])
            size = math.prod(ext) if ext else 1
            dlv = next(
                d for d in self.dense.deliveries if d.tensor == tn and d.parent == P and d.child == C
            )
            tests = self._own_tests(tn, P)
            fill_slots = self._delivery_slots(tn, C)
            # parent reads are decided at the multicast group leader
            mcast_positions = {
                i
                for i in fill_slots
                if self.nest[i].is_spatial
                and P <= self.nest[i].level < C
                and self.nest[i].dim not in self.proj[tn]
            }
            read_slots = [i for i in fill_slots if i not in mcast_positions]
            for end, action, count, slots in (
                (C, FILL, dlv.count, fill_slots),
                (P, READ, dlv.count / dlv.multicast, read_slots),
            ):
                name = arch.storage[end].name
                mdw = arch.storage[end].md_word_width
                if end == P and dlv.multicast > 1:
                    before = {
                        a: self._live(st, name, tn, a) for a in (READ, MDREAD)
                    }
                rf = self._delivery_format(end, tn, ext)
                exact = self._coordinate_dependent(tests, (tn,) if rf is not None else ())
                if rf is not None and rf.compressed:
                    if exact:
                        self._exact_delivery(st, name, tn, action, 1.0, tests, slots, rf, ext)
                    else:
                        fp = self._footprint(rf, tn, mdw)
                        frac = self._fractions(tests, slots)
                        for s in STATUSES:
                            st.add(name, tn, action, s, count * fp.expected_data_words * frac[s])
                        st.add(name, tn, action, SKIPPED, count * (size - fp.expected_data_words))
                else:
                    frac = self._fractions(tests, slots)
                    for s in STATUSES:
                        st.add(name, tn, action, s, count * size * frac[s])
                if rf is not None and any(r.kind != "U" for r in rf.ranks):
                    mdaction = MDFILL if end == C else MDREAD
                    if exact:
                        self._exact_delivery_md(
                            st, name, tn, mdaction, 1.0, tests, slots, rf, ext, mdw
                        )
                    else:
                        fp = self._footprint(rf, tn, mdw)
                        frac = self._fractions(tests, slots)
                        for s in STATUSES:
                            st.add(name, tn, mdaction, s, count * fp.expected_metadata_words * frac[s])
                if end == P and dlv.multicast > 1:
                    delta = sum(
                        self._live(st, name, tn, a) - before[a] for a in (READ, MDREAD)
                    )
                    st.multicast_extra_reads[name] = st.multicast_extra_reads.get(name, 0.0) + delta * (
                        dlv.multicast - 1
                    )

        # compute-feeding reads at the innermost keeper
        lk = chain[-1]
        lname = arch.storage[lk].name
        dense_reads = next(
            d.count for d in self.dense.deliveries if d.tensor == tn and d.child is None
        )
        tests = self._feeding_tests(tn, lk)
        slots = self._feed_slots(tn)
        rf = self.rfmts.get((lk, tn))
        if rf is not None and rf.compressed:
            full = [self._compression_test(tn)] + tests
            frac = self._fractions(full, slots, (tn,))
            for s in STATUSES:
                st.add(lname, tn, READ, s, dense_reads * frac[s])
        else:
            frac = self._fractions(tests, slots)
            for s in STATUSES:
                st.add(lname, tn, READ, s, dense_reads * frac[s])
        if rf is not None and rf.element_metadata_bits():
            bits = rf.element_metadata_bits()
            mdw = arch.storage[lk].md_word_width
            if rf.innermost_per_position:
                frac = self._fractions(tests, slots)
                for s in STATUSES:
                    st.add(lname, tn, MDREAD, s, dense_reads * (bits / mdw) * frac[s])
            else:
                # one metadata entry per stored element
                full = [self._compression_test(tn)] + tests
                frac = self._fractions(full, slots, (tn,))
                absent = self._fractions([self._compression_test(tn)], slots, (tn,))[SKIPPED]
                st.add(lname, tn, MDREAD, ACTUAL, dense_reads * (bits / mdw) * frac[ACTUAL])
                st.add(lname, tn, MDREAD, GATED, dense_reads * (bits / mdw) * frac[GATED])
                st.add(
                    lname, tn, MDREAD, SKIPPED,
                    dense_reads * (bits / mdw) * max(0.0, frac[SKIPPED] - absent),
                )

    def _emit_output(self, st: SparseTraffic, mac_tests):
        arch = self.arch
        tn = self.out
        chain = self.keepers[tn]
        lk = chain[-1]
        lname = arch.storage[lk].name
        z_tests = self._own_tests(tn, lk) + mac_tests
        exact = self._coordinate_dependent(z_tests)

        if not exact:
            frac = self._fractions(z_tests, list(range(self.n)))
            st_frac = frac
            for s in STATUSES:
                st.add(lname, tn, UPDATE, s, self.dense.compute_count * st_frac[s])
                st.add(lname, tn, READ, s, self.dense.get(lname, tn, READ) * st_frac[s])
        else:
            self._exact_output_per_compute(st, z_tests, lk)

        for pos in range(1, len(chain)):
            P, C = chain[pos - 1], chain[pos]
            pname, cname = arch.storage[P].name, arch.storage[C].name
            tests = self._own_tests(tn, P)
            if not tests:
                for name, action in ((pname, UPDATE), (pname, READ), (cname, FILL)):
                    v = self.dense.get(name, tn, action)
                    st.add(name, tn, action, ACTUAL, v)
                continue
            if self._coordinate_dependent(tests):
                self._exact_output_delivery(st, P, C, tests)
            else:
                frac = self._fractions(tests, self._delivery_slots(tn, C))
                for name, action in ((pname, UPDATE), (pname, READ), (cname, FILL)):
                    v = self.dense.get(name, tn, action)
                    for s in STATUSES:
                        st.add(name, tn, action, s, v * frac[s])

    def _exact_output_per_compute(self, st, z_tests, lk):
        tn = self.out
        lname = self.arch.storage[lk].name
        span = set(self._residence_span(tn, lk))
        touch_positions = [
            i
            for i in range(self.n)
            if not self.nest[i].is_spatial and self.nest[i].dim not in self.proj[tn] and i not in span
        ]
        first_visit_positions = [i for i in span if self.nest[i].dim not in self.proj[tn]]
        g_positions = [
            i
            for i in range(self.n)
            if self.nest[i].is_spatial
            and self.nest[i].level >= lk
            and self.nest[i].dim not in self.proj[tn]
        ]
        # updates: one per compute, no spatial dedup (each sibling's fate)
        for idx in self._enumerate(list(range(self.n))):
            frac = self._fractions_at(z_tests, idx)
            for s in STATUSES:
                st.add(lname, tn, UPDATE, s, frac[s])
        # RMW reads: deduplicated across the spatial-reduction group, minus
        # each element's structural first touch per first residence
        positions = [i for i in range(self.n) if i not in g_positions]
        for idx in self._enumerate(positions):
            touch = all(idx[i] == 0 for i in touch_positions)
            first_visit = all(idx[i] == 0 for i in first_visit_positions)
            if not touch or not first_visit:
                frac = self._fractions_at(z_tests, idx)
                for s in STATUSES:
                    st.add(lname, tn, READ, s, frac[s])

    def _exact_output_delivery(self, st, P, C, tests):
        tn = self.out
        pname, cname = self.arch.storage[P].name, self.arch.storage[C].name
        ext = tuple(self.extents[C][d] for d in self.proj[tn])
        size = math.prod(ext) if ext else 1
        red = [
            i
            for i in range(self.n)
            if self.nest[i].is_spatial
            and P <= self.nest[i].level < C
            and self.nest[i].dim not in self.proj[tn]
        ]
        span = self._residence_span(tn, C)
        spatial = [
            i
            for i in range(self.n)
            if self.nest[i].is_spatial and self.nest[i].level < C and i not in red
        ]
        first_visit_positions = [i for i in span if self.nest[i].dim not in self.proj[tn]]
        for idx in self._enumerate(sorted(span + spatial)):
            frac = self._fractions_at(tests, idx)
            revisit = any(idx[i] != 0 for i in first_visit_positions)
            for s in STATUSES:
                st.add(pname, tn, UPDATE, s, size * frac[s])
                if revisit:
                    st.add(pname, tn, READ, s, size * frac[s])
                    st.add(cname, tn, FILL, s, size * frac[s])

    # -- exact delivery helpers --------------------------------------------------

    def _tile_origin_at(self, idx, tn: str, ext: tuple[int, ...]) -> tuple[int, ...]:
        c = self._point_coord(idx, tn)
        return tuple((x // e) * e for x, e in zip(c, ext))

    def _exact_delivery(self, st, name, tn, action, weight, tests, slots, rf, ext):
        coords = self._concrete_coords(tn)
        size = math.prod(ext) if ext else 1
        for idx in self._enumerate(slots):
            origin = self._tile_origin_at(idx, tn, ext)
            stored = stored_data_words(rf, origin, coords)
            frac = self._fractions_at(tests, idx)
            for s in STATUSES:
                st.add(name, tn, action, s, weight * stored * frac[s])
            st.add(name, tn, action, SKIPPED, weight * (size - stored))

    def _exact_delivery_md(self, st, name, tn, action, weight, tests, slots, rf, ext, mdw):
        coords = self._concrete_coords(tn)
        for idx in self._enumerate(slots):
            origin = self._tile_origin_at(idx, tn, ext)
            words, _ = encode_tile_words(rf, ext, origin, coords, mdw)
            frac = self._fractions_at(tests, idx)
            for s in STATUSES:
                st.add(name, tn, action, s, weight * words * frac[s])

    # -- formats ------------------------------------------------------------------

    def _delivery_format(self, level: int, tn: str, sub_ext: tuple[int, ...]) -> ResolvedFormat | None:
        rf = self.rfmts.get((level, tn))
        if rf is None:
            return None
        return _re_extent(rf, sub_ext)

    def _footprint(self, rf: ResolvedFormat, tn: str, mdw: int) -> FormatFootprint:
        return footprint_for_resolved(rf, self.models[tn], mdw)

    def _tile_footprints(self, st: SparseTraffic):
        for li, lv in enumerate(self.arch.storage):
            for t in self.workload.tensors:
                if t.name not in self.mapping.levels[li].keep:
                    continue
                ext = {d: self.extents[li][d] for d in self.proj[t.name]}
                size = math.prod(ext.values()) if ext else 1
                rf = self.rfmts.get((li, t.name))
                if rf is None or t.name not in self.models:
                    md = 0.0
                    if rf is not None:
                        fp = _dense_metadata_bits(rf)
                        md = fp
                    st.tile_info[(lv.name, t.name)] = TileInfo(size, size, md, md)
                    continue
                fp = footprint_for_resolved(rf, self.models[t.name], lv.md_word_width)
                st.tile_info[(lv.name, t.name)] = TileInfo(
                    fp.expected_data_words,
                    fp.worst_data_words,
                    fp.expected_metadata_bits,
                    fp.worst_metadata_bits,
                )


def _dense_metadata_bits(rf: ResolvedFormat) -> float:
    """Worst-case metadata bits of a format with no density model (outputs):
    every fiber instantiated at full occupancy."""
    total = 0.0
    for rank in rf.ranks:
        if rank.kind == "U":
            continue
        if rank.kind in ("B", "UB"):
            total += rank.slots * rank.fiber_length
        elif rank.kind == "UOP":
            total += rank.slots * 2 * rank.width
        else:
            total += rank.slots * rank.fiber_length * rank.width
    return total


def _re_extent(rf: ResolvedFormat, sub_ext: tuple[int, ...]) -> ResolvedFormat:
    """Re-shape a resolved format to a delivered sub-tile, keeping widths."""
    ext_by_dim = dict(zip(rf.projection, sub_ext))
    tmp = []
    under = 1
    for i in range(len(rf.ranks) - 1, -1, -1):
        rk = rf.ranks[i]
        L = math.prod(ext_by_dim[d] for d in rk.dims)
        tmp.append((rk, L, under))
        under *= L
    tmp.reverse()
    rr = []
    slots = 1
    for rk, L, und in tmp:
        rr.append(ResolvedRank(rk.kind, rk.dims, L, und, slots, rk.width, rk.max_run))
        slots *= L
    return ResolvedFormat(tuple(rr), rf.projection, sub_ext, rf.compressed)


def footprint_for_resolved(
    rf: ResolvedFormat, model: DensityModel, md_word_width: int
) -> FormatFootprint:
    """Statistical footprint of a width-pinned resolved format."""
    from .formats import _footprint_exact

    if model.coordinate_dependent:
        return _footprint_exact(rf, model, md_word_width, None)
    ranks = tuple(
        RankFormat(
            rk.kind,
            coord_width=rk.width if rk.kind == "CP" else None,
            run_length_width=rk.width if rk.kind == "RLE" else None,
            offset_width=rk.width if rk.kind == "UOP" else None,
            dims=rk.dims,
        )
        for rk in rf.ranks
    )
    return tensor_representation_size(
        RepresentationFormat(ranks),
        rf.projection,
        dict(zip(rf.projection, rf.extents)),
        model,
        md_word_width,
    )


def compose_format_and_actions(analysis: "SparseAnalysis") -> SparseTraffic:
    """Format/action interaction and savings propagation are folded into the
    per-entry chains; exposed as the operation surface."""
    return analysis.run()


def propagate_savings(analysis: "SparseAnalysis") -> SparseTraffic:
    return analysis.run()


def sparse_traffic(
    workload: Workload,
    arch: Architecture,
    mapping: Mapping,
    safs: SafSpec | None = None,
    models: dict[str, DensityModel] | None = None,
) -> SparseTraffic:
    """Whole-run expected sparse traffic: per-tile breakdowns scaled by the
    number of tiles transferred, with metadata traffic composed in."""
    safs = safs or SafSpec()
    if models is None:
        models = {
            t.name: build_model(
                t.density_spec, tuple(workload.bound(d) for d in t.projection), t.projection
            )
            for t in workload.operands
        }
    return SparseAnalysis(workload, arch, mapping, safs, models).run()
