"""Command line front end.

  sparsemodel model  --workload W --arch A [--safs S] --mapping M --energy E
                     [--out report.csv] [--density-samples N] [--oracle]
  sparsemodel search --workload W --arch A [--safs S] [--constraints C]
                     --energy E --objective {cycles|energy|edp}
                     [--budget K] [--seed N]

Exit codes: 0 success, 1 invalid mapping, 2 specification error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import SpecError
from .mapper import Objective, SearchBudget, search
from .microarch import evaluate
from .oracle import random_tensor, simulate
from .specio import emit_mapping, emit_report, parse_constraints, parse_problem


def _read(path: str) -> str:
    return Path(path).read_text()


def _common_inputs(args) -> tuple:
    return (
        _read(args.workload),
        _read(args.arch),
        _read(args.safs) if args.safs else None,
        _read(args.energy),
    )


def cmd_model(args) -> int:
    wtext, atext, stext, etext = _common_inputs(args)
    problem = parse_problem(wtext, atext, stext, _read(args.mapping), etext)
    report = evaluate(problem, capacity_quantile=args.capacity_quantile)
    text = emit_report(report, "text").decode()
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_bytes(emit_report(report, "csv"))
        print(f"wrote {args.out}")
    if args.oracle or args.density_samples:
        _cross_check(problem, args)
    return 0 if report.valid else 1


def _cross_check(problem, args) -> None:
    """Exact-simulation cross-check (small workloads only)."""
    wl = problem.workload
    if args.oracle:
        models = problem.density_models()
        tensors = {}
        for t in wl.operands:
            model = models[t.name]
            if not model.coordinate_dependent:
                print("oracle: skipping (needs coordinate-dependent density models)")
                return
            from .formats import materialize_nonzeros

            tensors[t.name] = materialize_nonzeros(model)
        counts = simulate(wl, tensors, problem.arch, problem.mapping, problem.safs)
        print("oracle exact counts:")
        for key in sorted(counts.table, key=str):
            cell = {k: v for k, v in counts.table[key].items() if v}
            print(f"  {key}: {cell}")
    if args.density_samples:
        n = args.density_samples
        from collections import defaultdict

        acc: dict = defaultdict(float)
        for trial in range(n):
            tensors = {
                t.name: random_tensor(
                    tuple(wl.bound(d) for d in t.projection),
                    t.density_spec,
                    seed=trial * 9973 + hash(t.name) % 997,
                    projection=t.projection,
                ).coords
                for t in wl.operands
            }
            counts = simulate(wl, tensors, problem.arch, problem.mapping, problem.safs)
            for key, cell in counts.table.items():
                for status, v in cell.items():
                    acc[key + (status,)] += v / n
        print(f"monte-carlo means over {n} samples:")
        for key in sorted(acc, key=str):
            if acc[key]:
                print(f"  {key}: {acc[key]:.3f}")


def cmd_search(args) -> int:
    wtext, atext, stext, etext = _common_inputs(args)
    # a trivial placeholder mapping; search ignores the template's mapping
    problem = parse_problem(
        wtext,
        atext,
        stext,
        _trivial_mapping_text(wtext, atext),
        etext,
    )
    constraints = (
        parse_constraints(_read(args.constraints), problem.arch) if args.constraints else None
    )
    budget = (
        SearchBudget("random", args.budget, args.seed)
        if args.budget
        else SearchBudget("exhaustive")
    )
    result = search(problem, constraints, Objective(args.objective), budget)
    print(f"evaluated {result.evaluated} mappings ({result.valid} valid)")
    print(f"best {args.objective}: {result.objective_value}")
    sys.stdout.write(emit_mapping(result.mapping, problem.arch))
    sys.stdout.write(emit_report(result.report, "text").decode())
    if args.out:
        Path(args.out).write_bytes(emit_report(result.report, "csv"))
        print(f"wrote {args.out}")
    return 0


def _trivial_mapping_text(wtext: str, atext: str) -> str:
    """All loops at the outermost level, everything kept everywhere."""
    from .specio import parse_architecture, parse_workload

    wl = parse_workload(wtext)
    arch = parse_architecture(atext)
    lines = ["mapping:", "  levels:"]
    for i, lv in enumerate(arch.level_names):
        lines.append(f"    - level: {lv}")
        if i == 0:
            loops = ", ".join(
                "{dim: %s, factor: %d, type: temporal}" % (d, b) for d, b in wl.dims
            )
            lines.append(f"      loops: [{loops}]")
        else:
            lines.append("      loops: []")
        lines.append(f"      keep: [{', '.join(t.name for t in wl.tensors)}]")
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sparsemodel", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--workload", required=True)
    common.add_argument("--arch", required=True)
    common.add_argument("--safs")
    common.add_argument("--energy", required=True)
    common.add_argument("--out", help="write the CSV report here")

    m = sub.add_parser("model", parents=[common], help="evaluate one mapping")
    m.add_argument("--mapping", required=True)
    m.add_argument("--density-samples", type=int, default=0, metavar="N")
    m.add_argument("--oracle", action="store_true", help=argparse.SUPPRESS)
    m.add_argument(
        "--capacity-quantile", choices=["worst", "expected"], default="worst"
    )
    m.set_defaults(fn=cmd_model)

    s = sub.add_parser("search", parents=[common], help="search the mapspace")
    s.add_argument("--constraints")
    s.add_argument("--objective", choices=["cycles", "energy", "edp"], required=True)
    s.add_argument("--budget", type=int, help="random-mode evaluation budget")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(fn=cmd_search)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SpecError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
