"""Command-line entry point: ``sasakigraph <command> [options]``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import io_formats as io
from . import plotting
from .config import ConfigError, echo_config, load_config, parse_config
from .continuation import monitor_trace, solve_horizontal, solve_vertical
from .grid import SigmaGrid
from .pde_core import RESIDUALS
from .scenarios import (
    SCENARIOS,
    growth_horizontal_prescription,
    growth_vertical_prescription,
    manufactured_grids,
    scenario_growth_solves,
    scenario_identities,
    scenario_manufactured_convergence,
    scenario_nonexistence,
    scenario_nonuniqueness,
    scenario_sphere_baseline,
    scenario_theorem1,
)

log = logging.getLogger("sasakigraph")
THREADS_ENV = "SASAKIGRAPH_THREADS"


# ---------------------------------------------------------------- writers

def _write_result(directory, result):
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / "result.json"
    result.artifacts.append(str(path.name))
    io.write_json(path, "scenario_result", result.to_dict())
    return path


def _monitor_table(directory, rows, stem="monitors"):
    cols = {k: [r[k] for r in rows] for k in ("t", "min_u", "max_u", "sup_v", "Gamma1", "Gamma2", "alarm")}
    io.write_table_csv(directory / f"{stem}.csv", cols)
    plotting.plot_trace(directory / f"{stem}.png", rows)
    return [f"{stem}.csv", f"{stem}.png"]


def _field_outputs(directory, stem, values, grid):
    io.write_field(directory, stem, values, grid)
    s, v = plotting.fiber_profile(grid, values)
    io.write_table_csv(directory / f"{stem}_fiber_profile.csv", {"s": s, stem: v})
    x, vb = plotting.base_profile(grid, values)
    io.write_table_csv(directory / f"{stem}_base_profile.csv", {"x1": x, stem: vb})
    plotting.plot_fiber_profile(directory / f"{stem}_fiber_profile.png", grid, {stem: values})
    plotting.plot_base_profile(directory / f"{stem}_base_profile.png", grid, {stem: values})
    return [f"{stem}.csv", f"{stem}.bin", f"{stem}_fiber_profile.csv", f"{stem}_base_profile.csv",
            f"{stem}_fiber_profile.png", f"{stem}_base_profile.png"]


def _residual_outputs(directory, stem, values):
    counts, edges = plotting.residual_histogram(values)
    io.write_table_csv(directory / f"{stem}_hist.csv",
                       {"log10_lo": edges[:-1], "log10_hi": edges[1:], "count": counts})
    plotting.plot_residual_histogram(directory / f"{stem}_hist.png", values)
    return [f"{stem}_hist.csv", f"{stem}_hist.png"]


def _report_outputs(directory, stem, report, K, spec, ell):
    out = []
    io.write_json(directory / f"{stem}_report.json", "solver_report", report.to_dict())
    out.append(f"{stem}_report.json")
    ob = report.certificates["obstruction"]
    io.write_json(directory / f"{stem}_obstruction.json", "obstruction_certificate", ob)
    w = ob["witness"]
    io.write_table_csv(directory / f"{stem}_shell_profile.csv",
                       {"c": w["c"], "profile_min": w["profile_min"], "profile_max": w["profile_max"]})
    plotting.plot_shell_profile(directory / f"{stem}_shell_profile.png", w["c"], w["profile_min"], w["profile_max"])
    out += [f"{stem}_obstruction.json", f"{stem}_shell_profile.csv", f"{stem}_shell_profile.png"]
    out += _monitor_table(directory, monitor_trace(report, ell, spec), f"{stem}_monitors")
    if report.final_u is not None:
        grid = report.final_u.grid
        out += _field_outputs(directory, f"{stem}_u", report.final_u.values, grid)
        res = RESIDUALS[report.kind](report.final_u, K, spec).values.values
        out += _residual_outputs(directory, f"{stem}_residual", res)
    return out


# -------------------------------------------------------------- scenarios

def run_scenario(name, cfg, root):
    spec, grid = cfg.build_spec(), cfg.build_grid()
    opts = cfg.solver.options()
    sp = cfg.scenarios
    d = Path(root) / name
    d.mkdir(parents=True, exist_ok=True)
    if name == "sphere_baseline":
        res = scenario_sphere_baseline(spec, grid, sp.radii)
    elif name == "theorem1":
        k = sp.theorem1_k.build(cfg.n)
        res = scenario_theorem1(spec, grid, k)
        kv = np.broadcast_to(k.value(grid.x), grid.shape)
        res.artifacts += _field_outputs(d, "u_explicit", np.log((cfg.m - 1) / kv), grid)
    elif name == "growth_solves":
        hgrid = SigmaGrid.make(cfg.n, cfg.m, cfg.grid.N_x, sp.horizontal_N_theta)
        res = scenario_growth_solves(spec, grid, horizontal_grid=hgrid, opts=opts)
        res.artifacts += _report_outputs(d, "vertical", res.reports["vertical"],
                                         growth_vertical_prescription(cfg.m, n=cfg.n), spec, opts.ell)
        res.artifacts += _report_outputs(d, "horizontal", res.reports["horizontal"],
                                         growth_horizontal_prescription(cfg.m, n=cfg.n), spec, opts.ell)
    elif name == "nonexistence":
        res = scenario_nonexistence(spec, grid, sp.a, sp.b, opts)
        for label, (K, ob, rep) in res.reports.items():
            res.artifacts += _report_outputs(d, f"forced_{label}", rep, K, spec, opts.ell)
    elif name == "nonuniqueness":
        w = sp.w.build(cfg.n)
        res = scenario_nonuniqueness(spec, grid, w)
        res.artifacts += _field_outputs(d, "u_lifted_w", np.broadcast_to(w.value(grid.x), grid.shape), grid)
    elif name in ("manufactured_vertical", "manufactured_horizontal"):
        kind = name.split("_", 1)[1]
        grids = manufactured_grids(kind, cfg.n, cfg.m, sp.manufactured_resolutions, sp.manufactured_other)
        expr = sp.manufactured_vertical if kind == "vertical" else sp.manufactured_horizontal
        res = scenario_manufactured_convergence(spec, kind, grids, expr, opts)
        if "errors" in res.info:
            io.write_table_csv(d / "convergence.csv",
                               {"resolution": res.info["resolutions"], "sup_error": res.info["errors"]})
            plotting.plot_convergence(d / "convergence.png", res.info["resolutions"], res.info["errors"])
            res.artifacts += ["convergence.csv", "convergence.png"]
    elif name == "identities":
        res = scenario_identities(spec, sp.verify_points, cfg.solver.seed)
    else:
        raise ValueError(f"unknown scenario {name!r}")
    _write_result(d, res)
    return res


def _summary(results):
    bad = [r for r in results if not r.passed]
    for r in results:
        line = f"{r.name}: {r.status}"
        if not r.passed:
            line += f" (failed: {', '.join(r.failed_criteria())})"
        print(line)
    if bad:
        print("failing: " + ", ".join(r.name for r in bad), file=sys.stderr)
    return 0 if not bad else 1


# ---------------------------------------------------------------- commands

def run(cfg, command="scenario"):
    """Execute a command for a validated config; returns the exit status."""
    root = Path(cfg.output_dir)
    root.mkdir(parents=True, exist_ok=True)
    echo_config(cfg, root)
    if command == "scenario":
        names = SCENARIOS if cfg.scenario == "all" else (cfg.scenario,)
        results = [run_scenario(n, cfg, root) for n in names]
        return _summary(results)
    if command == "verify":
        return _summary([run_scenario("identities", cfg, root)])
    if command in ("solve-vertical", "solve-horizontal"):
        kind = command.split("-")[1]
        spec, grid, K = cfg.build_spec(), cfg.build_grid(), cfg.build_prescription()
        opts = cfg.solver.options()
        rep = (solve_vertical if kind == "vertical" else solve_horizontal)(K, spec, grid, opts)
        _report_outputs(root, kind, rep, K, spec, opts.ell)
        print(f"{kind}: {rep.outcome} (final t = {rep.stats.get('final_t', 0):.6g})")
        if rep.outcome != "converged":
            print(f"{kind} solve did not converge: {rep.outcome}", file=sys.stderr)
            return 1
        return 0
    if command == "manufacture":
        return _summary([run_scenario(n, cfg, root) for n in ("manufactured_vertical", "manufactured_horizontal")])
    raise ValueError(f"unknown command {command!r}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML run configuration")
    common.add_argument("--output", type=Path, help="artifact directory (overrides output_dir)")
    common.add_argument("--scenario", help="scenario name or 'all'")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--threads", type=int, help=f"BLAS thread count (default ${THREADS_ENV})")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="sasakigraph", description="Radial graphs over sphere bundles.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("verify", parents=[common], help="run the geometry identity suite")
    sub.add_parser("solve-vertical", parents=[common], help="solve the vertical curvature equation")
    sub.add_parser("solve-horizontal", parents=[common], help="solve the horizontal curvature equation")
    sc = sub.add_parser("scenario", parents=[common], help="run named verification scenarios")
    sc.add_argument("name", nargs="?", help="scenario name or 'all'")
    sub.add_parser("manufactured", parents=[common], help=argparse.SUPPRESS)
    sub.add_parser("manufacture", parents=[common], help="manufactured-solution convergence study")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        base = parse_config(args.config).model_dump() if args.config else {}
        scenario = getattr(args, "name", None) or args.scenario
        if scenario:
            base["scenario"] = scenario
        if args.output:
            base["output_dir"] = str(args.output)
        if args.seed is not None:
            base.setdefault("solver", {})["seed"] = args.seed
        cfg = load_config(base)
    except (ConfigError, OSError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    threads = args.threads or int(os.environ.get(THREADS_ENV, "0") or 0) or None
    command = "manufacture" if args.command == "manufactured" else args.command
    with threadpool_limits(limits=threads):
        return run(cfg, command)


if __name__ == "__main__":
    sys.exit(main())
