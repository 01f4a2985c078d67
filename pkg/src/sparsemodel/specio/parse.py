"""Parsers for the five input specifications.

All inputs are YAML documents with one expected top-level key each
(``workload``, ``architecture``, ``sparse_optimizations``, ``mapping``,
``energy_table``, plus ``constraints`` for the mapper). Syntax errors carry
the YAML line/column; semantic errors carry the structural path of the
offending node and the entity name. Parsing never raises anything outside
the SpecError family, no matter the bytes fed in.
"""

from __future__ import annotations

import yaml

from ..arch import Architecture, ComputeLevel, StorageLevel
from ..density import DensityModelSpec
from ..energy import EnergyTable
from ..errors import SpecError, SpecInvariantError, SpecReferenceError, SpecSyntaxError
from ..formats import RankFormat, RepresentationFormat, describe_classic_format
from ..mapping import LevelMapping, Loop, Mapping, complete_residual_factors, validate_mapping_structure
from ..mapper import LevelConstraints, MapspaceConstraints
from ..problem import Problem
from ..safs import ActionOptimization, ComputeSaf, LevelSafs, SafSpec, expand_double_sided, validate_safs
from ..workload import TensorDecl, Workload


def _load(text: str, where: str):
    try:
        doc = yaml.safe_load(text)
    except yaml.MarkedYAMLError as e:
        mark = e.problem_mark
        loc = f"{where}:{mark.line + 1}:{mark.column + 1}" if mark else where
        raise SpecSyntaxError(f"YAML error: {e.problem or e}", where=loc)
    except yaml.YAMLError as e:
        raise SpecSyntaxError(f"YAML error: {e}", where=where)
    if doc is None:
        raise SpecSyntaxError("empty document", where=where)
    return doc


def _mapping_node(node, path: str) -> dict:
    if not isinstance(node, dict):
        raise SpecSyntaxError(f"expected a mapping, got {type(node).__name__}", where=path)
    return node


def _list_node(node, path: str) -> list:
    if not isinstance(node, list):
        raise SpecSyntaxError(f"expected a list, got {type(node).__name__}", where=path)
    return node


def _get(node: dict, key: str, path: str, required: bool = True, default=None):
    if key not in node:
        if required:
            raise SpecSyntaxError(f"missing required field {key!r}", where=path)
        return default
    return node[key]


def _int(value, path: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SpecSyntaxError(f"expected an integer, got {value!r}", where=path)
    if minimum is not None and value < minimum:
        raise SpecInvariantError(f"value {value} below minimum {minimum}", where=path)
    return value


def _num(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecSyntaxError(f"expected a number, got {value!r}", where=path)
    return float(value)


def _str(value, path: str) -> str:
    if not isinstance(value, str):
        raise SpecSyntaxError(f"expected a string, got {value!r}", where=path)
    return value


def _wrap_invariant(fn, path: str, entity: str | None = None):
    try:
        return fn()
    except SpecError:
        raise
    except Exception as e:  # core type invariant violations
        raise SpecInvariantError(str(e), where=path, entity=entity)


# -- workload -----------------------------------------------------------------


def parse_density(node, path: str) -> DensityModelSpec:
    node = _mapping_node(node, path)
    kind = _str(_get(node, "kind", path), f"{path}.kind")
    try:
        if kind == "uniform":
            return DensityModelSpec(
                "uniform",
                density=_num(_get(node, "density", path), f"{path}.density"),
                bernoulli=bool(node.get("bernoulli", False)),
            )
        if kind == "fixed_structured":
            return DensityModelSpec(
                "fixed_structured",
                n=_int(_get(node, "n", path), f"{path}.n", 1),
                m=_int(_get(node, "m", path), f"{path}.m", 1),
                dim=_str(_get(node, "dim", path), f"{path}.dim"),
            )
        if kind == "banded":
            return DensityModelSpec(
                "banded", band_width=_int(_get(node, "band_width", path), f"{path}.band_width", 1)
            )
        if kind == "actual_data":
            return DensityModelSpec("actual_data", path=_str(_get(node, "path", path), f"{path}.path"))
    except SpecError:
        raise
    except Exception as e:
        raise SpecInvariantError(str(e), where=path)
    raise SpecSyntaxError(f"unknown density model kind {kind!r}", where=f"{path}.kind")


def parse_workload(text: str) -> Workload:
    doc = _mapping_node(_load(text, "workload"), "workload")
    node = _mapping_node(_get(doc, "workload", "workload"), "workload")
    dims_node = _mapping_node(_get(node, "dims", "workload"), "workload.dims")
    dims = []
    for name, bound in dims_node.items():
        dims.append((_str(name, "workload.dims"), _int(bound, f"workload.dims.{name}", 1)))
    tensors = []
    for i, tnode in enumerate(_list_node(_get(node, "tensors", "workload"), "workload.tensors")):
        path = f"workload.tensors[{i}]"
        tnode = _mapping_node(tnode, path)
        name = _str(_get(tnode, "name", path), f"{path}.name")
        projection = tuple(
            _str(d, f"{path}.projection") for d in _list_node(_get(tnode, "projection", path), f"{path}.projection")
        )
        is_output = bool(tnode.get("output", False))
        density = None
        if "density" in tnode:
            density = parse_density(tnode["density"], f"{path}.density")
        tensors.append(TensorDecl(name, projection, density, is_output))
    return _wrap_invariant(lambda: Workload(tuple(dims), tuple(tensors)), "workload")


# -- architecture ---------------------------------------------------------------


def parse_architecture(text: str) -> Architecture:
    doc = _mapping_node(_load(text, "architecture"), "architecture")
    node = _mapping_node(_get(doc, "architecture", "architecture"), "architecture")
    levels = _list_node(_get(node, "levels", "architecture"), "architecture.levels")
    storage: list[StorageLevel] = []
    compute: ComputeLevel | None = None
    for i, lnode in enumerate(levels):
        path = f"architecture.levels[{i}]"
        lnode = _mapping_node(lnode, path)
        name = _str(_get(lnode, "name", path), f"{path}.name")
        if lnode.get("compute", False):
            if compute is not None:
                raise SpecInvariantError("multiple compute levels", where=path, entity=name)
            compute = _wrap_invariant(
                lambda: ComputeLevel(name, _int(_get(lnode, "num_units", path), f"{path}.num_units", 1)),
                path,
                name,
            )
            continue
        if compute is not None:
            raise SpecInvariantError(
                "storage level after the compute level", where=path, entity=name
            )
        mk = lambda: StorageLevel(
            name,
            capacity=_int(_get(lnode, "capacity", path), f"{path}.capacity", 1),
            read_bandwidth=_num(_get(lnode, "read_bandwidth", path), f"{path}.read_bandwidth"),
            write_bandwidth=_num(_get(lnode, "write_bandwidth", path), f"{path}.write_bandwidth"),
            word_width=_int(_get(lnode, "word_width", path), f"{path}.word_width", 1),
            spatial_fanout=_int(lnode.get("spatial_fanout", 1), f"{path}.spatial_fanout", 1),
            metadata_word_width=(
                _int(lnode["metadata_word_width"], f"{path}.metadata_word_width", 1)
                if "metadata_word_width" in lnode
                else None
            ),
        )
        storage.append(_wrap_invariant(mk, path, name))
    if compute is None:
        raise SpecSyntaxError("architecture needs a final compute level", where="architecture.levels")
    return _wrap_invariant(lambda: Architecture(tuple(storage), compute), "architecture")


# -- sparse optimizations ---------------------------------------------------------


def parse_rank_format(node, path: str) -> RankFormat:
    node = _mapping_node(node, path)
    kind = _str(_get(node, "kind", path), f"{path}.kind").upper()
    dims = None
    if "dims" in node:
        dims = tuple(_str(d, f"{path}.dims") for d in _list_node(node["dims"], f"{path}.dims"))
    mk = lambda: RankFormat(
        kind,
        coord_width=_int(node["coord_width"], f"{path}.coord_width", 1) if "coord_width" in node else None,
        run_length_width=(
            _int(node["run_length_width"], f"{path}.run_length_width", 1)
            if "run_length_width" in node
            else None
        ),
        offset_width=_int(node["offset_width"], f"{path}.offset_width", 1) if "offset_width" in node else None,
        dims=dims,
    )
    return _wrap_invariant(mk, path, kind)


def parse_safs(text: str) -> SafSpec:
    doc = _mapping_node(_load(text, "sparse_optimizations"), "sparse_optimizations")
    node = _mapping_node(
        _get(doc, "sparse_optimizations", "sparse_optimizations"), "sparse_optimizations"
    )
    levels: dict[str, LevelSafs] = {}
    for i, lnode in enumerate(_list_node(node.get("levels", []), "sparse_optimizations.levels")):
        path = f"sparse_optimizations.levels[{i}]"
        lnode = _mapping_node(lnode, path)
        lname = _str(_get(lnode, "level", path), f"{path}.level")
        formats: dict[str, RepresentationFormat] = {}
        for j, fnode in enumerate(_list_node(lnode.get("formats", []), f"{path}.formats")):
            fpath = f"{path}.formats[{j}]"
            fnode = _mapping_node(fnode, fpath)
            tname = _str(_get(fnode, "tensor", fpath), f"{fpath}.tensor")
            if "format" in fnode:
                fmt = _wrap_invariant(
                    lambda: describe_classic_format(_str(fnode["format"], f"{fpath}.format")),
                    fpath,
                    tname,
                )
            else:
                ranks = tuple(
                    parse_rank_format(r, f"{fpath}.ranks[{k}]")
                    for k, r in enumerate(_list_node(_get(fnode, "ranks", fpath), f"{fpath}.ranks"))
                )
                fmt = _wrap_invariant(lambda: RepresentationFormat(ranks), fpath, tname)
            if tname in formats:
                raise SpecInvariantError("duplicate format for tensor", where=fpath, entity=tname)
            formats[tname] = fmt
        raw_opts = []
        for j, onode in enumerate(_list_node(lnode.get("actions", []), f"{path}.actions")):
            opath = f"{path}.actions[{j}]"
            onode = _mapping_node(onode, opath)
            raw_opts.append(
                {
                    "kind": _str(_get(onode, "kind", opath), f"{opath}.kind"),
                    "target": _str(_get(onode, "target", opath), f"{opath}.target"),
                    "condition_on": [
                        _str(c, f"{opath}.condition_on")
                        for c in _list_node(_get(onode, "condition_on", opath), f"{opath}.condition_on")
                    ],
                    "_path": opath,
                }
            )
        opts = []
        for o in expand_double_sided(raw_opts):
            opts.append(
                _wrap_invariant(
                    lambda: ActionOptimization(o["kind"], o["target"], tuple(o["condition_on"])),
                    o["_path"],
                    o["target"],
                )
            )
        if lname in levels:
            raise SpecInvariantError("duplicate SAF level entry", where=path, entity=lname)
        levels[lname] = LevelSafs(formats=formats, optimizations=tuple(opts))
    compute = None
    if node.get("compute") is not None:
        cpath = "sparse_optimizations.compute"
        cnode = _mapping_node(node["compute"], cpath)
        compute = _wrap_invariant(
            lambda: ComputeSaf(_str(_get(cnode, "kind", cpath), f"{cpath}.kind")), cpath
        )
    return SafSpec(levels=levels, compute=compute)


# -- mapping -----------------------------------------------------------------------


def parse_mapping(text: str, workload: Workload, arch: Architecture) -> Mapping:
    doc = _mapping_node(_load(text, "mapping"), "mapping")
    node = _mapping_node(_get(doc, "mapping", "mapping"), "mapping")
    entries = {}
    for i, lnode in enumerate(_list_node(_get(node, "levels", "mapping"), "mapping.levels")):
        path = f"mapping.levels[{i}]"
        lnode = _mapping_node(lnode, path)
        lname = _str(_get(lnode, "level", path), f"{path}.level")
        if lname not in arch.level_names:
            raise SpecReferenceError("mapping names unknown storage level", where=path, entity=lname)
        loops = []
        for j, lpnode in enumerate(_list_node(lnode.get("loops", []), f"{path}.loops")):
            lpath = f"{path}.loops[{j}]"
            lpnode = _mapping_node(lpnode, lpath)
            dim = _str(_get(lpnode, "dim", lpath), f"{lpath}.dim")
            if dim not in workload.dim_names:
                raise SpecReferenceError("loop over unknown dim", where=lpath, entity=dim)
            loops.append(
                _wrap_invariant(
                    lambda: Loop(
                        dim,
                        _int(_get(lpnode, "factor", lpath), f"{lpath}.factor", 1),
                        _str(lpnode.get("type", "temporal"), f"{lpath}.type"),
                    ),
                    lpath,
                    dim,
                )
            )
        keep = frozenset(
            _str(t, f"{path}.keep") for t in _list_node(lnode.get("keep", []), f"{path}.keep")
        )
        for t in keep:
            if t not in {x.name for x in workload.tensors}:
                raise SpecReferenceError("keep-set names unknown tensor", where=f"{path}.keep", entity=t)
        if lname in entries:
            raise SpecInvariantError("duplicate mapping level entry", where=path, entity=lname)
        entries[lname] = LevelMapping(tuple(loops), keep)
    missing = [n for n in arch.level_names if n not in entries]
    if missing:
        raise SpecReferenceError(
            "mapping missing storage levels", where="mapping.levels", entity=",".join(missing)
        )
    mp = Mapping(tuple(entries[n] for n in arch.level_names))
    mp = _wrap_invariant(lambda: complete_residual_factors(mp, workload), "mapping")
    violations = validate_mapping_structure(mp, workload, arch)
    if violations:
        raise SpecInvariantError("; ".join(violations), where="mapping")
    return mp


# -- energy table ----------------------------------------------------------------


def parse_energy(text: str) -> EnergyTable:
    doc = _mapping_node(_load(text, "energy_table"), "energy_table")
    node = _mapping_node(_get(doc, "energy_table", "energy_table"), "energy_table")
    entries: dict[tuple[str, str, str], float] = {}
    for comp, actions in node.items():
        comp = _str(comp, "energy_table")
        path = f"energy_table.{comp}"
        actions = _mapping_node(actions, path)
        for action, spec in actions.items():
            apath = f"{path}.{action}"
            if isinstance(spec, (int, float)) and not isinstance(spec, bool):
                entries[(comp, _str(action, apath), "actual")] = float(spec)
                continue
            spec = _mapping_node(spec, apath)
            for status, v in spec.items():
                entries[(comp, _str(action, apath), _str(status, apath))] = _num(v, f"{apath}.{status}")
    return _wrap_invariant(lambda: EnergyTable(entries), "energy_table")


# -- constraints -----------------------------------------------------------------


def parse_constraints(text: str, arch: Architecture) -> MapspaceConstraints:
    doc = _mapping_node(_load(text, "constraints"), "constraints")
    node = _mapping_node(_get(doc, "constraints", "constraints"), "constraints")
    levels = {}
    for i, lnode in enumerate(_list_node(node.get("levels", []), "constraints.levels")):
        path = f"constraints.levels[{i}]"
        lnode = _mapping_node(lnode, path)
        lname = _str(_get(lnode, "level", path), f"{path}.level")
        if lname not in arch.level_names:
            raise SpecReferenceError("constraints name unknown level", where=path, entity=lname)
        pinned = {
            _str(d, f"{path}.pinned_factors"): _int(f, f"{path}.pinned_factors.{d}", 1)
            for d, f in _mapping_node(lnode.get("pinned_factors", {}), f"{path}.pinned_factors").items()
        }
        divides = {
            _str(d, f"{path}.divides"): _int(v, f"{path}.divides.{d}", 1)
            for d, v in _mapping_node(lnode.get("divides", {}), f"{path}.divides").items()
        }
        order = tuple(_str(d, f"{path}.order") for d in _list_node(lnode.get("order", []), f"{path}.order"))
        levels[lname] = LevelConstraints(pinned, order, divides)
    keep = {}
    for i, knode in enumerate(_list_node(node.get("keep", []), "constraints.keep")):
        path = f"constraints.keep[{i}]"
        knode = _mapping_node(knode, path)
        lname = _str(_get(knode, "level", path), f"{path}.level")
        keep[lname] = frozenset(
            _str(t, f"{path}.tensors") for t in _list_node(_get(knode, "tensors", path), f"{path}.tensors")
        )
    return MapspaceConstraints(levels=levels, keep=keep)


# -- problem bundle ----------------------------------------------------------------


def parse_problem(
    workload_text: str,
    arch_text: str,
    saf_text: str | None,
    mapping_text: str,
    energy_text: str,
) -> Problem:
    """Parse and cross-validate the full input bundle."""
    workload = parse_workload(workload_text)
    arch = parse_architecture(arch_text)
    safs = parse_safs(saf_text) if saf_text else SafSpec()
    mapping = parse_mapping(mapping_text, workload, arch)
    energy = parse_energy(energy_text)
    keep = {arch.storage[i].name: mapping.levels[i].keep for i in range(len(arch.storage))}
    validate_safs(safs, workload, arch, keep)
    return Problem(workload, arch, safs, mapping, energy)
