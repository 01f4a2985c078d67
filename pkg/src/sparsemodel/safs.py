"""Sparse acceleration feature (SAF) specifications.

Three feature families, attached per architecture level:
  - representation formats (per tensor, per storage level),
  - gating/skipping of storage actions via intersections,
  - gating/skipping of compute.

An action optimization with one condition tensor is a leader-follower
intersection (target's accesses eliminated when the leader tile is empty).
Two condition tensors form a conjunctive condition (eliminated when either
tile is empty). As a shorthand, listing the target among two conditions
denotes a double-sided intersection and expands to the symmetric
leader-follower pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .arch import Architecture
from .errors import SpecInvariantError, SpecReferenceError
from .formats import RepresentationFormat
from .workload import Workload

GATE = "gate"
SKIP = "skip"


@dataclass(frozen=True)
class ActionOptimization:
    kind: str  # gate | skip
    target: str
    condition_on: tuple[str, ...]

    def __post_init__(self):
        if self.kind not in (GATE, SKIP):
            raise SpecInvariantError(f"optimization kind must be gate|skip, got {self.kind!r}")
        if not self.condition_on:
            raise SpecInvariantError("optimization needs at least one condition tensor", entity=self.target)
        if self.target in self.condition_on:
            raise SpecInvariantError("a tensor is not its own condition", entity=self.target)
        if len(set(self.condition_on)) != len(self.condition_on):
            raise SpecInvariantError("duplicate condition tensor", entity=self.target)


@dataclass(frozen=True)
class LevelSafs:
    formats: dict[str, RepresentationFormat] = field(default_factory=dict)
    optimizations: tuple[ActionOptimization, ...] = ()


@dataclass(frozen=True)
class ComputeSaf:
    kind: str  # gate | skip

    def __post_init__(self):
        if self.kind not in (GATE, SKIP):
            raise SpecInvariantError(f"compute optimization must be gate|skip, got {self.kind!r}")


@dataclass(frozen=True)
class SafSpec:
    """SAFs per storage level (by level name) plus an optional compute SAF."""

    levels: dict[str, LevelSafs] = field(default_factory=dict)
    compute: ComputeSaf | None = None

    def level(self, name: str) -> LevelSafs:
        return self.levels.get(name, LevelSafs())


def expand_double_sided(opts: list[dict]) -> list[dict]:
    """Expand double-sided sugar: target listed among two conditions becomes
    the symmetric pair of leader-follower entries."""
    out = []
    for o in opts:
        conds = list(o.get("condition_on", ()))
        if o.get("target") in conds and len(conds) == 2:
            a, b = conds
            other = b if o["target"] == a else a
            out.append({**o, "target": o["target"], "condition_on": [other]})
            out.append({**o, "target": other, "condition_on": [o["target"]]})
        else:
            out.append(o)
    return out


def validate_safs(safs: SafSpec, workload: Workload, arch: Architecture, keep_by_level: dict[str, frozenset[str]] | None = None) -> None:
    """Cross-validate SAFs against the workload and architecture.

    ``keep_by_level`` (level name -> kept tensors) enables the co-residency
    check; without a mapping, only name resolution and schema rules apply.
    """
    tnames = {t.name for t in workload.tensors}
    level_names = set(arch.level_names)
    out_name = workload.output.name
    for lname, ls in safs.levels.items():
        if lname not in level_names:
            raise SpecReferenceError("SAF references unknown storage level", entity=lname)
        for tname, fmt in ls.formats.items():
            if tname not in tnames:
                raise SpecReferenceError("format on unknown tensor", entity=tname)
            if tname == out_name and fmt.has_metadata:
                raise SpecInvariantError(
                    "output tensor has no density model and may only use uncompressed representation",
                    entity=tname,
                )
        seen_targets = set()
        for opt in ls.optimizations:
            if opt.target not in tnames:
                raise SpecReferenceError("optimization targets unknown tensor", entity=opt.target)
            for c in opt.condition_on:
                if c not in tnames:
                    raise SpecReferenceError("optimization conditions on unknown tensor", entity=c)
            if opt.target in seen_targets:
                raise SpecInvariantError(
                    f"multiple optimizations for tensor {opt.target} at level {lname}", entity=opt.target
                )
            seen_targets.add(opt.target)
            if keep_by_level is not None:
                kept = keep_by_level.get(lname, frozenset())
                for t in (opt.target, *opt.condition_on):
                    if t not in kept:
                        raise SpecReferenceError(
                            f"intersection operand {t} is not kept at level {lname}", entity=t
                        )
            if opt.kind == SKIP:
                # Position-based skipping needs something to intersect on:
                # the condition tensor must expose metadata at this level.
                for c in opt.condition_on:
                    fmt = ls.formats.get(c)
                    if fmt is None or not fmt.has_metadata:
                        raise SpecInvariantError(
                            f"skipping at {lname} conditioned on {c} requires a metadata-bearing "
                            f"format for {c} at that level (gating may value-check instead)",
                            entity=c,
                        )
