"""Spec file parsing, canonical emission, and report serialization."""

from .emit import (
    emit_architecture,
    emit_energy,
    emit_mapping,
    emit_problem,
    emit_report,
    emit_safs,
    emit_workload,
)
from .parse import (
    parse_architecture,
    parse_constraints,
    parse_energy,
    parse_mapping,
    parse_problem,
    parse_safs,
    parse_workload,
)

__all__ = [
    "parse_problem",
    "parse_workload",
    "parse_architecture",
    "parse_safs",
    "parse_mapping",
    "parse_energy",
    "parse_constraints",
    "emit_problem",
    "emit_workload",
    "emit_architecture",
    "emit_safs",
    "emit_mapping",
    "emit_energy",
    "emit_report",
]
