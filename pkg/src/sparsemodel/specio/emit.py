"""Canonical spec emission and report serialization."""

from __future__ import annotations

import io

import yaml

from ..arch import Architecture
from ..energy import EnergyTable
from ..errors import SpecInvariantError
from ..mapping import Mapping
from ..microarch import PerformanceReport
from ..problem import Problem
from ..safs import SafSpec
from ..sparse import ACTUAL, GATED, SKIPPED
from ..workload import Workload

COMPUTE_TENSOR_PLACEHOLDER = "—"  # em dash in compute CSV rows


def _density_dict(spec) -> dict:
    out = {"kind": spec.kind}
    if spec.kind == "uniform":
        out["density"] = spec.density
        if spec.bernoulli:
            out["bernoulli"] = True
    elif spec.kind == "fixed_structured":
        out.update(n=spec.n, m=spec.m, dim=spec.dim)
    elif spec.kind == "banded":
        out["band_width"] = spec.band_width
    elif spec.kind == "actual_data":
        out["path"] = spec.path
    return out


def emit_workload(workload: Workload) -> str:
    tensors = []
    for t in workload.tensors:
        node = {"name": t.name, "projection": list(t.projection)}
        if t.is_output:
            node["output"] = True
        if t.density_spec is not None:
            node["density"] = _density_dict(t.density_spec)
        tensors.append(node)
    return yaml.safe_dump(
        {"workload": {"dims": dict(workload.dims), "tensors": tensors}}, sort_keys=False
    )


def emit_architecture(arch: Architecture) -> str:
    levels = []
    for lv in arch.storage:
        node = {
            "name": lv.name,
            "capacity": lv.capacity,
            "read_bandwidth": lv.read_bandwidth,
            "write_bandwidth": lv.write_bandwidth,
            "word_width": lv.word_width,
            "spatial_fanout": lv.spatial_fanout,
        }
        if lv.metadata_word_width is not None:
            node["metadata_word_width"] = lv.metadata_word_width
        levels.append(node)
    levels.append({"name": arch.compute.name, "compute": True, "num_units": arch.compute.num_units})
    return yaml.safe_dump({"architecture": {"levels": levels}}, sort_keys=False)


def emit_safs(safs: SafSpec) -> str:
    levels = []
    for lname in sorted(safs.levels):
        ls = safs.levels[lname]
        node: dict = {"level": lname}
        if ls.formats:
            fmts = []
            for tname in sorted(ls.formats):
                fmt = ls.formats[tname]
                ranks = []
                for r in fmt.ranks:
                    rn: dict = {"kind": r.kind}
                    if r.coord_width is not None:
                        rn["coord_width"] = r.coord_width
                    if r.run_length_width is not None:
                        rn["run_length_width"] = r.run_length_width
                    if r.offset_width is not None:
                        rn["offset_width"] = r.offset_width
                    if r.dims is not None:
                        rn["dims"] = list(r.dims)
                    ranks.append(rn)
                fmts.append({"tensor": tname, "ranks": ranks})
            node["formats"] = fmts
        if ls.optimizations:
            node["actions"] = [
                {"kind": o.kind, "target": o.target, "condition_on": list(o.condition_on)}
                for o in ls.optimizations
            ]
        levels.append(node)
    doc: dict = {"sparse_optimizations": {"levels": levels}}
    if safs.compute is not None:
        doc["sparse_optimizations"]["compute"] = {"kind": safs.compute.kind}
    return yaml.safe_dump(doc, sort_keys=False)


def emit_mapping(mapping: Mapping, arch: Architecture) -> str:
    levels = []
    for lv, lm in zip(arch.storage, mapping.levels):
        levels.append(
            {
                "level": lv.name,
                "loops": [
                    {"dim": lp.dim, "factor": lp.factor, "type": lp.kind} for lp in lm.loops
                ],
                "keep": sorted(lm.keep),
            }
        )
    return yaml.safe_dump({"mapping": {"levels": levels}}, sort_keys=False)


def emit_energy(table: EnergyTable) -> str:
    tree: dict = {}
    for (comp, action, status), v in sorted(table.entries.items()):
        tree.setdefault(comp, {}).setdefault(action, {})[status] = v
    return yaml.safe_dump({"energy_table": tree}, sort_keys=False)


def emit_problem(problem: Problem) -> dict[str, str]:
    """Canonical text for each of the five specs (round-trips to an equal
    Problem)."""
    return {
        "workload": emit_workload(problem.workload),
        "architecture": emit_architecture(problem.arch),
        "sparse_optimizations": emit_safs(problem.safs),
        "mapping": emit_mapping(problem.mapping, problem.arch),
        "energy_table": emit_energy(problem.energy),
    }


# -- reports -------------------------------------------------------------------


def _fmt_count(x: float) -> str:
    if abs(x - round(x)) < 1e-9:
        return str(int(round(x)))
    return repr(x)


def emit_report(report: PerformanceReport, format: str = "text") -> bytes:
    """Serialize a performance report as CSV rows or a text summary."""
    if format == "csv":
        out = io.StringIO()
        out.write("level,tensor,action,status,count\n")
        if report.traffic is not None:
            for (level, tensor, action), cell in sorted(report.traffic.table.items(), key=str):
                tname = tensor if tensor is not None else COMPUTE_TENSOR_PLACEHOLDER
                for status in (ACTUAL, GATED, SKIPPED):
                    count = cell[status]
                    if count == 0 and status != ACTUAL:
                        continue
                    out.write(f"{level},{tname},{action},{status},{_fmt_count(count)}\n")
        return out.getvalue().encode()
    if format == "text":
        out = io.StringIO()
        if not report.valid:
            out.write(f"INVALID: {report.reason}\n")
        else:
            out.write("VALID\n")
            out.write(f"cycles: {report.cycles}\n")
            out.write(f"energy_pJ: {report.energy:.2f}\n")
            out.write(f"edp: {report.edp:.2f}\n")
        for level, bits in sorted(report.metadata_bits.items()):
            out.write(f"metadata_bits[{level}]: {bits:.2f}\n")
        for port, u in sorted(report.utilization.items()):
            out.write(f"utilization[{port}]: {u:.2f}\n")
        if report.valid:
            for comp, e in sorted(report.energy_breakdown.items()):
                out.write(f"energy_pJ[{comp}]: {e:.2f}\n")
        return out.getvalue().encode()
    raise SpecInvariantError(f"unknown report format {format!r}")
