"""Mapspace enumeration and search.

The mapspace assigns every dim one factor per storage level (ordered
factorizations of the bound), designates each non-unit (level, dim) factor
temporal or spatial (spatial capped by the level's fanout), and permutes
each level's temporal loops. Spatial loops sit first within a level, in dim
declaration order: their relative order has no temporal meaning. Keep-sets
come from the search template and are not searched.

Exhaustive search returns the global optimum; random search evaluates a
seeded sample. Capacity-invalid mappings are discarded, not ranked. Ties
break on the mapping's canonical serialization, so results are reproducible
regardless of evaluation order.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field, replace
from typing import Iterator

from .arch import Architecture
from .errors import SpecInvariantError
from .mapping import Loop, LevelMapping, Mapping, validate_mapping_structure
from .microarch import PerformanceReport, evaluate
from .problem import Problem
from .workload import Workload

OBJECTIVES = ("cycles", "energy", "edp")


@dataclass(frozen=True)
class Objective:
    kind: str

    def __post_init__(self):
        if self.kind not in OBJECTIVES:
            raise SpecInvariantError(f"objective must be one of {OBJECTIVES}, got {self.kind!r}")

    def value(self, report: PerformanceReport) -> float:
        if self.kind == "cycles":
            return report.cycles
        if self.kind == "energy":
            return report.energy
        return report.edp


@dataclass(frozen=True)
class SearchBudget:
    mode: str = "exhaustive"  # exhaustive | random
    max_evaluations: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("exhaustive", "random"):
            raise SpecInvariantError(f"search mode must be exhaustive|random, got {self.mode!r}")


@dataclass(frozen=True)
class LevelConstraints:
    pinned_factors: dict[str, int] = field(default_factory=dict)
    order: tuple[str, ...] = ()  # required relative order among temporal loops
    divides: dict[str, int] = field(default_factory=dict)  # factor must divide value


@dataclass(frozen=True)
class MapspaceConstraints:
    levels: dict[str, LevelConstraints] = field(default_factory=dict)
    keep: dict[str, frozenset[str]] = field(default_factory=dict)  # level -> kept tensors

    def level(self, name: str) -> LevelConstraints:
        return self.levels.get(name, LevelConstraints())


def _factorizations(bound: int, parts: int) -> Iterator[tuple[int, ...]]:
    """Ordered tuples of `parts` positive integers whose product is `bound`."""
    if parts == 1:
        yield (bound,)
        return
    for first in sorted(d for d in range(1, bound + 1) if bound % d == 0):
        for rest in _factorizations(bound // first, parts - 1):
            yield (first,) + rest


def _order_ok(dims_in_order: tuple[str, ...], required: tuple[str, ...]) -> bool:
    pos = {d: i for i, d in enumerate(dims_in_order)}
    present = [d for d in required if d in pos]
    return all(pos[a] < pos[b] for a, b in zip(present, present[1:]))


def enumerate_mapspace(
    workload: Workload,
    arch: Architecture,
    constraints: MapspaceConstraints | None = None,
) -> Iterator[Mapping]:
    """Lazily yield every structurally valid mapping satisfying the
    constraints, in a deterministic order."""
    constraints = constraints or MapspaceConstraints()
    nlev = len(arch.storage)
    dims = workload.dim_names
    default_keep = frozenset(t.name for t in workload.tensors)

    per_dim_options: list[list[tuple[int, ...]]] = []
    for d, bound in workload.dims:
        opts = []
        for fac in _factorizations(bound, nlev):
            ok = True
            for li, f in enumerate(fac):
                lc = constraints.level(arch.storage[li].name)
                if d in lc.pinned_factors and lc.pinned_factors[d] != f:
                    ok = False
                    break
                if d in lc.divides and lc.divides[d] % f != 0:
                    ok = False
                    break
            if ok:
                opts.append(fac)
        per_dim_options.append(opts)

    for combo in itertools.product(*per_dim_options):
        factors_at = [{d: combo[di][li] for di, d in enumerate(dims)} for li in range(nlev)]

        def level_variants(li: int) -> Iterator[tuple[Loop, ...]]:
            lv = arch.storage[li]
            lc = constraints.level(lv.name)
            active = [d for d in dims if factors_at[li][d] > 1]
            spatial_subsets = []
            for r in range(len(active) + 1):
                for sub in itertools.combinations(active, r):
                    if math.prod(factors_at[li][d] for d in sub) <= lv.spatial_fanout:
                        spatial_subsets.append(sub)
            for sub in spatial_subsets:
                temporal = [d for d in active if d not in sub]
                for perm in itertools.permutations(temporal):
                    if not _order_ok(perm, lc.order):
                        continue
                    loops = tuple(Loop(d, factors_at[li][d], "spatial") for d in sub) + tuple(
                        Loop(d, factors_at[li][d]) for d in perm
                    )
                    yield loops

        def build(li: int, acc: list[tuple[Loop, ...]]):
            if li == nlev:
                levels = tuple(
                    LevelMapping(acc[i], constraints.keep.get(arch.storage[i].name, default_keep))
                    for i in range(nlev)
                )
                mp = Mapping(levels)
                if not validate_mapping_structure(mp, workload, arch):
                    yield mp
                return
            for loops in level_variants(li):
                yield from build(li + 1, acc + [loops])

        yield from build(0, [])


@dataclass(frozen=True)
class SearchResult:
    mapping: Mapping
    report: PerformanceReport
    objective_value: float
    evaluated: int
    valid: int


def search(
    problem_template: Problem,
    constraints: MapspaceConstraints | None,
    objective: Objective,
    budget: SearchBudget = SearchBudget(),
) -> SearchResult:
    """Find the best mapping under the objective.

    The template's mapping field is ignored; its workload, architecture,
    SAFs, and energy table are evaluated against enumerated candidates.
    """
    candidates = enumerate_mapspace(problem_template.workload, problem_template.arch, constraints)
    if budget.mode == "random":
        pool = list(candidates)
        rng = random.Random(budget.seed)
        k = min(budget.max_evaluations or len(pool), len(pool))
        candidates = iter(rng.sample(pool, k))

    best: tuple[float, str, Mapping, PerformanceReport] | None = None
    evaluated = valid = 0
    for mp in candidates:
        if budget.mode == "exhaustive" and budget.max_evaluations is not None:
            if evaluated >= budget.max_evaluations:
                break
        report = evaluate(replace(problem_template, mapping=mp))
        evaluated += 1
        if not report.valid:
            continue
        valid += 1
        key = (objective.value(report), mp.canonical())
        if best is None or key < (best[0], best[1]):
            best = (key[0], key[1], mp, report)
    if best is None:
        raise SpecInvariantError(
            f"no valid mapping found ({evaluated} candidates evaluated)"
        )
    return SearchResult(best[2], best[3], best[0], evaluated, valid)
