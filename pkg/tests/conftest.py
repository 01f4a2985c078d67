import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sparsemodel import (
    ActionOptimization,
    Architecture,
    ComputeLevel,
    ComputeSaf,
    EnergyTable,
    LevelMapping,
    LevelSafs,
    Loop,
    Mapping,
    Problem,
    RankFormat,
    RepresentationFormat,
    SafSpec,
    StorageLevel,
    TensorDecl,
    Workload,
    matmul_workload,
    uniform,
)


def make_arch(
    levels=2,
    fanouts=(4, 1),
    capacity=10**7,
    bw=10**6,
    word=8,
    names=None,
    units=None,
):
    names = names or (["BackingStorage", "Buffer", "L2", "L3"][:levels])
    storage = tuple(
        StorageLevel(
            names[i],
            capacity=capacity,
            read_bandwidth=bw,
            write_bandwidth=bw,
            word_width=word,
            spatial_fanout=fanouts[i],
        )
        for i in range(levels)
    )
    total = 1
    for f in fanouts[:levels]:
        total *= f
    return Architecture(storage=storage, compute=ComputeLevel("Compute", units or total))


@pytest.fixture
def running_example():
    """4x4x4 matmul, A 25% uniform, two storage levels, four buffers."""
    wl = matmul_workload(4, 4, 4, {"A": uniform(0.25), "B": uniform(1.0)})
    arch = make_arch()
    mp = Mapping(
        (
            LevelMapping((Loop("m", 4), Loop("n", 4, "spatial")), frozenset({"A", "B", "Z"})),
            LevelMapping((Loop("k", 4),), frozenset({"A", "B", "Z"})),
        )
    )
    return wl, arch, mp


@pytest.fixture
def dot4():
    """Four-step dot product with one buffer and one unit."""
    wl = Workload(
        dims=(("k", 4),),
        tensors=(
            TensorDecl("A", ("k",), uniform(0.5)),
            TensorDecl("B", ("k",), uniform(0.5)),
            TensorDecl("Z", (), None, is_output=True),
        ),
    )
    arch = make_arch(levels=1, fanouts=(1,), names=["Buffer"])
    mp = Mapping((LevelMapping((Loop("k", 4),), frozenset({"A", "B", "Z"})),))
    return wl, arch, mp


DOT_A = frozenset({(0,), (2,)})  # values [1, 0, 3, 0]
DOT_B = frozenset({(0,), (3,)})  # values [2, 0, 0, 4]


def simple_energy(components, compute="Compute"):
    entries = {}
    for c in components:
        for action in ("read", "write", "metadata_read", "metadata_write"):
            entries[(c, action, "actual")] = 1.0
            entries[(c, action, "gated")] = 0.1
    entries[(compute, "compute", "actual")] = 1.0
    entries[(compute, "compute", "gated")] = 0.1
    return EnergyTable(entries)


def cp_format(ndims=1):
    return RepresentationFormat(tuple(RankFormat("CP") for _ in range(max(1, ndims))))


def bitmask_format(ndims=1):
    return RepresentationFormat(tuple(RankFormat("B") for _ in range(max(1, ndims))))
