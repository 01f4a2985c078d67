"""Analytical speed/energy model for sparse (and dense) tensor accelerators.

Evaluation runs in three steps: dense dataflow analysis from the mapping,
sparse filtering of that traffic under representation formats and
gating/skipping features, and micro-architectural conversion to cycles and
energy. A small exact loop-nest simulator doubles as the validation oracle,
and a mapper searches constrained mapspaces.
"""

from .arch import Architecture, ComputeLevel, StorageLevel
from .dataflow import DenseTraffic, dense_traffic, tile_shapes, validate_mapping_structure
from .density import (
    DensityModelSpec,
    OccupancyDistribution,
    actual_data,
    banded,
    build_model,
    fixed_structured,
    load_actual_data,
    uniform,
)
from .energy import EnergyTable
from .errors import SpecError, SpecInvariantError, SpecReferenceError, SpecSyntaxError
from .formats import (
    RankFormat,
    RepresentationFormat,
    describe_classic_format,
    rank_metadata_bits,
    tensor_representation_size,
)
from .intersections import IntersectionBinding, resolve_intersection_operands
from .mapper import (
    LevelConstraints,
    MapspaceConstraints,
    Objective,
    SearchBudget,
    enumerate_mapspace,
    search,
)
from .mapping import LevelMapping, Loop, Mapping
from .microarch import (
    PerformanceReport,
    check_capacity,
    compute_cycles,
    compute_energy,
    evaluate,
)
from .oracle import ConcreteTensor, ExactCounts, random_tensor, simulate
from .problem import Problem
from .safs import ActionOptimization, ComputeSaf, LevelSafs, SafSpec
from .sparse import SparseTraffic, per_tile_action_breakdown, sparse_traffic
from .workload import TensorDecl, Workload, matmul_workload

__version__ = "0.1.0"

__all__ = [
    "Architecture",
    "ComputeLevel",
    "StorageLevel",
    "Workload",
    "TensorDecl",
    "matmul_workload",
    "Mapping",
    "LevelMapping",
    "Loop",
    "SafSpec",
    "LevelSafs",
    "ActionOptimization",
    "ComputeSaf",
    "RankFormat",
    "RepresentationFormat",
    "describe_classic_format",
    "rank_metadata_bits",
    "tensor_representation_size",
    "DensityModelSpec",
    "OccupancyDistribution",
    "uniform",
    "fixed_structured",
    "banded",
    "actual_data",
    "build_model",
    "load_actual_data",
    "EnergyTable",
    "Problem",
    "DenseTraffic",
    "dense_traffic",
    "tile_shapes",
    "validate_mapping_structure",
    "SparseTraffic",
    "sparse_traffic",
    "per_tile_action_breakdown",
    "IntersectionBinding",
    "resolve_intersection_operands",
    "PerformanceReport",
    "evaluate",
    "check_capacity",
    "compute_cycles",
    "compute_energy",
    "Objective",
    "SearchBudget",
    "MapspaceConstraints",
    "LevelConstraints",
    "enumerate_mapspace",
    "search",
    "ConcreteTensor",
    "ExactCounts",
    "simulate",
    "random_tensor",
    "SpecError",
    "SpecSyntaxError",
    "SpecReferenceError",
    "SpecInvariantError",
]
