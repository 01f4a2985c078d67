"""The evaluated bundle: workload + architecture + SAFs + mapping + energies."""

from __future__ import annotations

from dataclasses import dataclass

from .arch import Architecture
from .density import DensityModel, build_model
from .energy import EnergyTable
from .mapping import Mapping
from .safs import SafSpec
from .workload import Workload


@dataclass(frozen=True)
class Problem:
    workload: Workload
    arch: Architecture
    safs: SafSpec
    mapping: Mapping
    energy: EnergyTable

    def density_models(self) -> dict[str, DensityModel]:
        return {
            t.name: build_model(
                t.density_spec,
                tuple(self.workload.bound(d) for d in t.projection),
                t.projection,
            )
            for t in self.workload.operands
        }
