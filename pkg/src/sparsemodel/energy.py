"""Flat per-action energy table (replaces an external estimation back end)."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import SpecInvariantError, SpecReferenceError

ACTION_KINDS = ("read", "write", "metadata_read", "metadata_write", "compute")
ACTUAL, GATED = "actual", "gated"


@dataclass(frozen=True)
class EnergyTable:
    """pJ per (component, action kind, actual|gated). Skipped actions cost 0."""

    entries: dict[tuple[str, str, str], float] = field(default_factory=dict)

    def __post_init__(self):
        for (comp, action, status), v in self.entries.items():
            if action not in ACTION_KINDS:
                raise SpecInvariantError(f"unknown action kind {action!r}", entity=comp)
            if status not in (ACTUAL, GATED):
                raise SpecInvariantError(f"energy status must be actual|gated, got {status!r}", entity=comp)
            if v < 0:
                raise SpecInvariantError(f"negative energy {v} for {action}", entity=comp)
        for (comp, action, status), v in self.entries.items():
            if status == GATED:
                a = self.entries.get((comp, action, ACTUAL))
                if a is not None and v > a:
                    raise SpecInvariantError(
                        f"gated {action} energy {v} exceeds actual {a}", entity=comp
                    )

    def lookup(self, component: str, action: str, status: str) -> float:
        key = (component, action, status)
        if key in self.entries:
            return self.entries[key]
        raise SpecReferenceError(
            f"energy table has no entry for action {action!r} ({status})", entity=component
        )
