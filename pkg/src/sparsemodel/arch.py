"""Architecture description: ordered storage levels plus one compute level."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import SpecInvariantError, SpecReferenceError


@dataclass(frozen=True)
class StorageLevel:
    """One storage level. ``spatial_fanout`` is the number of child instances
    (next-inner level) each instance of this level feeds."""

    name: str
    capacity: int  # bits
    read_bandwidth: float  # words/cycle
    write_bandwidth: float  # words/cycle
    word_width: int  # bits
    spatial_fanout: int = 1
    metadata_word_width: int | None = None  # defaults to word_width

    def __post_init__(self):
        if self.capacity <= 0:
            raise SpecInvariantError("storage capacity must be > 0", entity=self.name)
        if self.read_bandwidth <= 0 or self.write_bandwidth <= 0:
            raise SpecInvariantError("bandwidths must be > 0", entity=self.name)
        if self.word_width < 1:
            raise SpecInvariantError("word width must be >= 1 bit", entity=self.name)
        if self.spatial_fanout < 1:
            raise SpecInvariantError("spatial fanout must be >= 1", entity=self.name)

    @property
    def md_word_width(self) -> int:
        return self.metadata_word_width if self.metadata_word_width else self.word_width


@dataclass(frozen=True)
class ComputeLevel:
    name: str
    num_units: int

    def __post_init__(self):
        if self.num_units < 1:
            raise SpecInvariantError("compute level needs >= 1 unit", entity=self.name)


@dataclass(frozen=True)
class Architecture:
    """Storage levels ordered outermost -> innermost, then the compute level.

    Invariant: the product of storage fanouts equals the compute unit count
    (every instance path through the fanout tree ends at one unit).
    """

    storage: tuple[StorageLevel, ...]
    compute: ComputeLevel

    def __post_init__(self):
        if not self.storage:
            raise SpecInvariantError("architecture needs at least one storage level")
        names = [lv.name for lv in self.storage] + [self.compute.name]
        if len(set(names)) != len(names):
            raise SpecInvariantError("duplicate level name", entity=",".join(names))
        fanout = math.prod(lv.spatial_fanout for lv in self.storage)
        if fanout != self.compute.num_units:
            raise SpecInvariantError(
                f"fanout product {fanout} must equal compute unit count {self.compute.num_units}",
                entity=self.compute.name,
            )

    @property
    def level_names(self) -> tuple[str, ...]:
        return tuple(lv.name for lv in self.storage)

    def storage_index(self, name: str) -> int:
        for i, lv in enumerate(self.storage):
            if lv.name == name:
                return i
        raise SpecReferenceError("unknown storage level", entity=name)

    def instances(self, index: int) -> int:
        """Maximum instance count of storage level ``index`` (fanout tree)."""
        return math.prod(lv.spatial_fanout for lv in self.storage[:index])
