"""Command line front end.

Exit codes: 0 success, 2 invalid arguments, 3 file I/O or parse failure,
4 branch cap hit in full branching mode (outputs are still written).
Solver findings — self-intersecting or suboptimal tours — are results, not
process failures, and never affect the exit code.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .analysis import detect_crossings, loop_rate_experiment, scaling_fit
from .instance import (
    GeneratorConfig,
    Instance,
    InstanceFormatError,
    generate,
    read_instance,
    write_instance,
)
from .jsonutil import dumps_canonical
from .oracle import exactness_harness
from .solver import Branching, BranchCapExceeded, Objective, SolverConfig, solve

_G = "{:.12g}".format

RUN_REPORT_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["schema_version", "instance", "config", "result", "timings"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": 1},
        "instance": {
            "type": "object",
            "required": ["name", "n", "source"],
            "additionalProperties": False,
            "properties": {
                "name": {"type": "string"},
                "n": {"type": "integer", "minimum": 2},
                "source": {"enum": ["points", "matrix"]},
                "path": {"type": "string"},
            },
        },
        "config": {
            "type": "object",
            "required": [
                "objective", "branching", "tie_rel_tol", "tie_abs_tol", "branch_cap",
            ],
            "additionalProperties": False,
            "properties": {
                "objective": {"enum": ["min", "max"]},
                "branching": {"enum": ["pure", "full", "pruned"]},
                "tie_rel_tol": {"type": "number"},
                "tie_abs_tol": {"type": "number"},
                "branch_cap": {"type": "integer"},
                "pruned_rule": {"enum": ["keep-longest", "keep-shortest"]},
            },
        },
        "result": {
            "type": "object",
            "required": [
                "order", "length", "delta_evals", "branch_events",
                "max_live_branches", "pruned_branches", "dedup_merges", "truncated",
            ],
            "additionalProperties": False,
            "properties": {
                "order": {"type": "array", "items": {"type": "integer"}},
                "length": {"type": "number"},
                "delta_evals": {"type": "integer"},
                "branch_events": {"type": "integer"},
                "max_live_branches": {"type": "integer"},
                "pruned_branches": {"type": "integer"},
                "dedup_merges": {"type": "integer"},
                "truncated": {"type": "boolean"},
            },
        },
        "analysis": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"crossings": {"type": ["integer", "null"]}},
        },
        "timings": {
            "type": "object",
            "required": ["solve_s"],
            "additionalProperties": False,
            "properties": {
                "solve_s": {"type": "number"},
                "total_s": {"type": "number"},
            },
        },
    },
}


def build_run_report(inst, config, result, *, crossings=None, solve_s=0.0,
                     total_s=None, path=None) -> dict:
    """Run report dict matching RUN_REPORT_SCHEMA."""
    cfg = {
        "objective": config.objective.value,
        "branching": config.branching.value,
        "tie_rel_tol": config.tie_rel_tol,
        "tie_abs_tol": config.tie_abs_tol,
        "branch_cap": config.branch_cap,
    }
    if config.branching is Branching.PRUNED:
        cfg["pruned_rule"] = (
            "keep-longest" if config.objective is Objective.MIN_TOUR else "keep-shortest"
        )
    instance = {
        "name": inst.name,
        "n": inst.n,
        "source": "points" if inst.points is not None else "matrix",
    }
    if path is not None:
        instance["path"] = str(path)
    report = {
        "schema_version": 1,
        "instance": instance,
        "config": cfg,
        "result": {
            "order": list(result.best_tour.order),
            "length": result.best_tour.length,
            "delta_evals": result.delta_evals,
            "branch_events": result.branch_events,
            "max_live_branches": result.max_live_branches,
            "pruned_branches": result.pruned_branches,
            "dedup_merges": result.dedup_merges,
            "truncated": result.truncated,
        },
        "analysis": {"crossings": crossings},
        "timings": {"solve_s": solve_s, "total_s": total_s if total_s is not None else solve_s},
    }
    return report


def emit_svg(inst, order, crossing_pairs=(), path=None) -> str:
    """Deterministic SVG of a closed route; crossing edges drawn highlighted.

    Element order is fixed: background, tour path, highlighted edges, points.
    """
    pts = inst.points
    if pts is None:
        raise ValueError("svg rendering needs point coordinates")
    n = len(order)
    xs = [pts[p][0] for p in order]
    ys = [pts[p][1] for p in order]
    w = max(xs) - min(xs)
    h = max(ys) - min(ys)
    extent = max(w, h, 1e-9)
    margin = 0.05 * extent
    vb = (min(xs) - margin, min(ys) - margin, w + 2 * margin, h + 2 * margin)
    stroke = 0.002 * extent
    radius = 0.005 * extent
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'viewBox="{_G(vb[0])} {_G(vb[1])} {_G(vb[2])} {_G(vb[3])}" '
        f'width="800" height="800">',
        f'<rect x="{_G(vb[0])}" y="{_G(vb[1])}" width="{_G(vb[2])}" '
        f'height="{_G(vb[3])}" fill="#ffffff"/>',
    ]
    d_attr = f"M {_G(xs[0])} {_G(ys[0])} " + " ".join(
        f"L {_G(x)} {_G(y)}" for x, y in zip(xs[1:], ys[1:])
    ) + " Z"
    lines.append(
        f'<path d="{d_attr}" fill="none" stroke="#1f3552" stroke-width="{_G(stroke)}"/>'
    )
    hot = sorted({e for pair in crossing_pairs for e in pair})
    for e in hot:
        x1, y1 = xs[e], ys[e]
        x2, y2 = xs[(e + 1) % n], ys[(e + 1) % n]
        lines.append(
            f'<line x1="{_G(x1)}" y1="{_G(y1)}" x2="{_G(x2)}" y2="{_G(y2)}" '
            f'stroke="#cc2200" stroke-width="{_G(2 * stroke)}"/>'
        )
    for x, y in zip(xs, ys):
        lines.append(f'<circle cx="{_G(x)}" cy="{_G(y)}" r="{_G(radius)}" fill="#111111"/>')
    lines.append("</svg>")
    svg = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(svg)
    return svg


def _parse_grid(text):
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}") from None


def _parse_sizes(text):
    try:
        return [int(t) for t in text.split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated ints, got {text!r}") from None


def _solver_config(args) -> SolverConfig:
    return SolverConfig(
        objective=Objective(args.objective),
        branching=Branching(args.mode),
        tie_rel_tol=args.tie_rel,
        tie_abs_tol=args.tie_abs,
        branch_cap=args.branch_cap,
    )


def _add_solver_flags(p):
    p.add_argument("--objective", choices=["min", "max"], default="min")
    p.add_argument("--mode", choices=["pure", "full", "pruned"], default="pure")
    p.add_argument("--tie-rel", type=float, default=1e-9)
    p.add_argument("--tie-abs", type=float, default=1e-12)
    p.add_argument("--branch-cap", type=int, default=10_000)


def cmd_generate(args) -> int:
    cfg = GeneratorConfig(
        n=args.n, grid_w=args.grid[0], grid_h=args.grid[1], seed=args.seed,
        allow_duplicates=args.allow_duplicates, continuous=args.continuous,
    )
    inst = generate(cfg)
    write_instance(inst, args.out)
    if not args.quiet:
        print(f"generated {inst.name} n={inst.n} -> {args.out}")
    return 0


def cmd_solve(args) -> int:
    inst = read_instance(args.infile)
    config = _solver_config(args)
    code = 0
    t0 = time.perf_counter()
    try:
        result = solve(inst, config)
    except BranchCapExceeded as e:
        result = e.result
        code = 4
        print(
            f"warning: branch cap {config.branch_cap} hit; result is the best "
            "explored leaf",
            file=sys.stderr,
        )
    solve_s = time.perf_counter() - t0
    crossings = None
    if inst.points is not None:
        crossings = detect_crossings(inst, result.best_tour.order).count
    total_s = time.perf_counter() - t0
    if args.svg:
        if inst.points is None:
            print("error: --svg needs point coordinates", file=sys.stderr)
            return 2
        cr = detect_crossings(inst, result.best_tour.order)
        emit_svg(inst, result.best_tour.order, cr.pairs, args.svg)
    if args.json:
        report = build_run_report(
            inst, config, result, crossings=crossings, solve_s=solve_s,
            total_s=total_s, path=args.infile,
        )
        Path(args.json).write_text(dumps_canonical(report))
    if not args.quiet:
        print(
            f"length={_G(result.best_tour.length)} "
            f"delta_evals={result.delta_evals} "
            f"branch_events={result.branch_events} "
            f"crossings={'na' if crossings is None else crossings} "
            f"truncated={str(result.truncated).lower()}"
        )
    return code


def cmd_verify(args) -> int:
    modes = [Branching(m) for m in dict.fromkeys(args.modes.split(","))]
    summary = exactness_harness(
        args.count, args.n_min, args.n_max,
        objective=Objective(args.objective), modes=modes,
        master_seed=args.seed, grid=args.grid, branch_cap=args.branch_cap,
    )
    if args.json:
        Path(args.json).write_text(dumps_canonical(summary.to_dict()))
    if not args.quiet:
        print(summary.to_text())
    return 0


def cmd_bench(args) -> int:
    cfg = SolverConfig(objective=Objective(args.objective))
    scaling = scaling_fit(
        args.sizes, args.reps, master_seed=args.seed, grid=args.grid, config=cfg
    )
    loops = loop_rate_experiment(
        args.sizes, args.reps, master_seed=args.seed, grid=args.grid, config=cfg
    )
    if args.json:
        Path(args.json).write_text(
            dumps_canonical({"scaling": scaling.to_dict(), "loop_rates": loops.to_dict()})
        )
    if not args.quiet:
        print(scaling.to_text())
        print(loops.to_text())
    return 0


def cmd_fig4(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    inst = generate(
        GeneratorConfig(n=args.n, grid_w=args.grid[0], grid_h=args.grid[1], seed=args.seed)
    )
    runs = {}
    for objective in (Objective.MIN_TOUR, Objective.MAX_TOUR):
        config = SolverConfig(objective=objective)
        t0 = time.perf_counter()
        result = solve(inst, config)
        solve_s = time.perf_counter() - t0
        cr = detect_crossings(inst, result.best_tour.order)
        emit_svg(
            inst, result.best_tour.order, cr.pairs,
            out_dir / f"{objective.value}_tour.svg",
        )
        runs[objective.value] = build_run_report(
            inst, config, result, crossings=cr.count, solve_s=solve_s
        )
    (out_dir / "tours.json").write_text(dumps_canonical(
        {"schema_version": 1, "instance": runs["min"]["instance"], "runs": runs}
    ))
    if not args.quiet:
        print(
            f"n={inst.n} min={_G(runs['min']['result']['length'])} "
            f"max={_G(runs['max']['result']['length'])} -> {out_dir}"
        )
    return 0


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="maxmin-tsp",
        description="Tour construction by recurrent extremal insertion, with "
        "exact verification and route diagnostics.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a seeded uniform instance file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--grid", type=_parse_grid, default=(1000, 1000), metavar="WxH")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--continuous", action="store_true")
    p.add_argument("--allow-duplicates", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("solve", help="construct a tour for an instance file")
    p.add_argument("--in", dest="infile", required=True)
    _add_solver_flags(p)
    p.add_argument("--svg", help="write the tour drawing here")
    p.add_argument("--json", help="write the run report here")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("verify", help="race the solver against an exact oracle")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--n-min", type=int, default=5)
    p.add_argument("--n-max", type=int, default=9)
    p.add_argument("--objective", choices=["min", "max"], default="min")
    p.add_argument("--modes", default="pure,full,pruned")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", type=_parse_grid, default=(10, 10), metavar="WxH")
    p.add_argument("--branch-cap", type=int, default=10_000)
    p.add_argument("--json")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("bench", help="work and time scaling plus loop rates")
    p.add_argument("--sizes", type=_parse_sizes, default=[100, 200, 400])
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--objective", choices=["min", "max"], default="min")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", type=_parse_grid, default=(1000, 1000), metavar="WxH")
    p.add_argument("--json")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("fig4", help="min and max tours of one instance, as SVG + JSON")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", type=_parse_grid, default=(1000, 1000), metavar="WxH")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(fn=cmd_fig4)
    return ap


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.fn(args)
    except InstanceFormatError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
