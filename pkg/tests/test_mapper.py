"""Mapper tests: enumeration counts vs a brute-force oracle, exhaustive
optimality vs independent re-evaluation, determinism."""

import itertools
import math
from dataclasses import replace

import pytest

from sparsemodel import (
    LevelConstraints,
    MapspaceConstraints,
    Objective,
    Problem,
    SafSpec,
    SearchBudget,
    enumerate_mapspace,
    evaluate,
    matmul_workload,
    search,
    uniform,
)
from sparsemodel.errors import SpecInvariantError
from conftest import make_arch, simple_energy


def brute_force_count(wl, arch):
    """Independent mapspace size oracle: ordered factorizations times
    spatial subsets times temporal permutations, filtered by fanout."""
    nlev = len(arch.storage)

    def facs(bound, parts):
        if parts == 1:
            return [(bound,)]
        out = []
        for d in range(1, bound + 1):
            if bound % d == 0:
                out.extend((d,) + rest for rest in facs(bound // d, parts - 1))
        return out

    total = 0
    per_dim = [facs(b, nlev) for _, b in wl.dims]
    for combo in itertools.product(*per_dim):
        ways = 1
        for li in range(nlev):
            active = [combo[i][li] for i in range(len(wl.dims)) if combo[i][li] > 1]
            level_ways = 0
            for mask in itertools.product([0, 1], repeat=len(active)):
                spatial = [f for f, m in zip(active, mask) if m]
                if math.prod(spatial) > arch.storage[li].spatial_fanout:
                    continue
                level_ways += math.factorial(len(active) - len(spatial))
            ways *= level_ways
        total += ways
    return total


def test_enumeration_count_matches_oracle():
    wl = matmul_workload(2, 2, 2, {"A": uniform(0.5), "B": uniform(0.5)})
    arch = make_arch(levels=2, fanouts=(2, 1))
    count = sum(1 for _ in enumerate_mapspace(wl, arch))
    assert count == brute_force_count(wl, arch)


def test_fully_pinned_single_mapping():
    wl = matmul_workload(2, 2, 2, {"A": uniform(0.5), "B": uniform(0.5)})
    arch = make_arch(levels=2, fanouts=(1, 1))
    constraints = MapspaceConstraints(
        levels={
            "BackingStorage": LevelConstraints(
                pinned_factors={"m": 2, "n": 2, "k": 2}, order=("m", "n", "k")
            ),
            "Buffer": LevelConstraints(pinned_factors={"m": 1, "n": 1, "k": 1}),
        }
    )
    maps = list(enumerate_mapspace(wl, arch, constraints))
    assert len(maps) == 1


def test_contradictory_constraints_empty_stream():
    wl = matmul_workload(2, 2, 2, {"A": uniform(0.5), "B": uniform(0.5)})
    arch = make_arch(levels=2, fanouts=(1, 1))
    constraints = MapspaceConstraints(
        levels={"BackingStorage": LevelConstraints(pinned_factors={"m": 3})}
    )
    assert list(enumerate_mapspace(wl, arch, constraints)) == []


def test_divisibility_constraint():
    wl = matmul_workload(4, 2, 2, {"A": uniform(0.5), "B": uniform(0.5)})
    arch = make_arch(levels=2, fanouts=(1, 1))
    constraints = MapspaceConstraints(
        levels={"BackingStorage": LevelConstraints(divides={"m": 2})}
    )
    for mp in enumerate_mapspace(wl, arch, constraints):
        f = math.prod(lp.factor for lp in mp.levels[0].loops if lp.dim == "m")
        assert 2 % f == 0


def _template():
    wl = matmul_workload(2, 2, 2, {"A": uniform(0.5), "B": uniform(1.0)})
    arch = make_arch(levels=2, fanouts=(2, 1), bw=2)
    from sparsemodel import LevelMapping, Loop, Mapping

    placeholder = Mapping(
        (
            LevelMapping(
                (Loop("m", 2), Loop("n", 2), Loop("k", 2)), frozenset({"A", "B", "Z"})
            ),
            LevelMapping((), frozenset({"A", "B", "Z"})),
        )
    )
    return Problem(wl, arch, SafSpec(), placeholder, simple_energy([s.name for s in arch.storage]))


@pytest.mark.parametrize("objective", ["cycles", "energy", "edp"])
def test_exhaustive_matches_independent_argmin(objective):
    tpl = _template()
    result = search(tpl, None, Objective(objective))
    # independent re-evaluation of every mapping
    best = None
    for mp in enumerate_mapspace(tpl.workload, tpl.arch):
        rep = evaluate(replace(tpl, mapping=mp))
        if not rep.valid:
            continue
        key = (Objective(objective).value(rep), mp.canonical())
        if best is None or key < best:
            best = key
    assert best is not None
    assert result.objective_value == pytest.approx(best[0])
    assert result.mapping.canonical() == best[1]


def test_returned_report_reproduces():
    tpl = _template()
    result = search(tpl, None, Objective("edp"))
    again = evaluate(replace(tpl, mapping=result.mapping))
    assert again.cycles == result.report.cycles
    assert again.energy == result.report.energy


def test_random_mode_deterministic_under_seed():
    tpl = _template()
    budget = SearchBudget("random", max_evaluations=10, seed=42)
    r1 = search(tpl, None, Objective("edp"), budget)
    r2 = search(tpl, None, Objective("edp"), budget)
    assert r1.mapping.canonical() == r2.mapping.canonical()
    assert r1.objective_value == r2.objective_value


def test_empty_mapspace_raises():
    tpl = _template()
    constraints = MapspaceConstraints(
        levels={"BackingStorage": LevelConstraints(pinned_factors={"m": 3})}
    )
    with pytest.raises(SpecInvariantError):
        search(tpl, constraints, Objective("cycles"))
