"""Exact simulator tests: the vignette rows, conservation, sampling."""

import math

import pytest

from sparsemodel import SafSpec, ComputeSaf, ActionOptimization, LevelSafs, random_tensor, simulate, uniform, fixed_structured, banded
from sparsemodel.density import UniformModel, build_model
from sparsemodel.errors import SpecInvariantError
from sparsemodel.oracle import ACTUAL, GATED, SKIPPED
from conftest import DOT_A, DOT_B, cp_format


def test_baseline_four_actual_computes(dot4):
    wl, arch, mp = dot4
    c = simulate(wl, {"A": DOT_A, "B": DOT_B}, arch, mp)
    assert c.get("MAC" if False else "Compute", None, "compute")[ACTUAL] == 4


def test_gate_compute_row(dot4):
    wl, arch, mp = dot4
    c = simulate(wl, {"A": DOT_A, "B": DOT_B}, arch, mp, SafSpec(compute=ComputeSaf("gate")))
    assert c.get("Compute", None, "compute") == {ACTUAL: 1.0, GATED: 3.0, SKIPPED: 0.0}


def test_skip_b_on_a_row(dot4):
    wl, arch, mp = dot4
    safs = SafSpec(
        levels={"Buffer": LevelSafs(
            formats={"A": cp_format(1)},
            optimizations=(ActionOptimization("skip", "B", ("A",)),),
        )}
    )
    c = simulate(wl, {"A": DOT_A, "B": DOT_B}, arch, mp, safs)
    assert c.get("Buffer", "B", "read") == {ACTUAL: 2.0, GATED: 0.0, SKIPPED: 2.0}


def test_conservation_against_saf_free(dot4):
    wl, arch, mp = dot4
    base = simulate(wl, {"A": DOT_A, "B": DOT_B}, arch, mp)
    safs = SafSpec(
        levels={"Buffer": LevelSafs(optimizations=(ActionOptimization("gate", "B", ("A",)),))},
        compute=ComputeSaf("gate"),
    )
    c = simulate(wl, {"A": DOT_A, "B": DOT_B}, arch, mp, safs)
    for key in base.table:
        assert c.total(*key) == pytest.approx(base.total(*key)), key


def test_size_limit_refuses():
    from sparsemodel import matmul_workload
    from conftest import make_arch
    from sparsemodel.mapping import Mapping, LevelMapping, Loop

    wl = matmul_workload(32, 2, 2, {"A": uniform(0.5), "B": uniform(0.5)})
    arch = make_arch(levels=1, fanouts=(1,), names=["Buffer"])
    mp = Mapping(
        (LevelMapping((Loop("m", 32), Loop("n", 2), Loop("k", 2)), frozenset({"A", "B", "Z"})),)
    )
    with pytest.raises(SpecInvariantError):
        simulate(wl, {}, arch, mp, limit=16)
    # the configurable limit admits it
    tensors = {
        "A": frozenset((i, 0) for i in range(16)),
        "B": frozenset(),
    }
    counts = simulate(wl, tensors, arch, mp, limit=32)
    assert counts.total("Compute", None, "compute") == 128


def test_random_tensor_uniform_exact_count():
    for seed in range(10):
        t = random_tensor((4, 4), uniform(0.25), seed, ("m", "k"))
        assert len(t.coords) == 4


def test_random_tensor_structured_blocks():
    spec = fixed_structured(2, 4, "k")
    for seed in range(10):
        t = random_tensor((8,), spec, seed, ("k",))
        assert len(t.coords) == 4
        for blk in range(2):
            assert sum(1 for (c,) in t.coords if blk * 4 <= c < (blk + 1) * 4) == 2


def test_random_tensor_banded_deterministic():
    t = random_tensor((4, 4), banded(1), 0, ("m", "k"))
    assert t.coords == frozenset((i, i) for i in range(4))


def test_sampling_histogram_matches_distribution():
    """Occupancy histograms from random_tensor converge to the model's
    distribution (TV < 0.02 at 10000 samples)."""
    spec = uniform(0.5)
    model = build_model(spec, (8,), ("k",))
    dist = model.occupancy_distribution((4,))
    counts = {}
    trials = 10000
    for i in range(trials):
        t = random_tensor((8,), spec, i, ("k",))
        occ = sum(1 for (c,) in t.coords if c < 4)
        counts[occ] = counts.get(occ, 0) + 1
    tv = 0.5 * sum(abs(counts.get(k, 0) / trials - dist.prob(k)) for k in range(5))
    assert tv < 0.02
