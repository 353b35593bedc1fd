"""Batch front door: ``ghd <command> --config FILE [--workers N] [--out DIR]``.

Commands
  check              admissibility report (JSON), exit 3 on a fail verdict
  seed               seed-table summary (JSON) and CSV dump
  solve              state sweep CSV: t,x,p,n,rho_p,rho_s,v_eff,u
  conserve           charge/entropy series CSV (t, value, drift)
  weakcheck          weak-form residual table, exit 1 if above tolerance
  compare-reference  upwind-oracle L1 gaps and convergence order
  plotdata           gnuplot-ready columnar profiles per time

Exit codes: 0 success, 1 diagnostic above tolerance, 2 configuration or
window error, 3 assumption failure, 4 convergence failure.  Identical
config (including any RNG seed inside it) produces byte-identical output
files; floats are written with 17 significant digits.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import multiprocessing
import os
import sys
from pathlib import Path

import numpy as np

from . import config as config_mod
from .diagnostics import (ENTROPY_FUNCTIONS, check_assumptions,
                          conservation_report, weak_form_residual,
                          weight_values)
from .errors import (AssumptionError, ConfigError, ConvergenceError,
                     GHDError, SupportWindowError)
from .fixed_point import Solver
from .kernel import KernelOperator
from .reference import (convergence_order, fixed_point_rho, integrate_upwind,
                        l1_gap)
from .seed import build_seed

COMMANDS = ("check", "seed", "solve", "conserve", "weakcheck",
            "compare-reference", "plotdata")


def _fmt(v) -> str:
    return f"{float(v):.17g}"


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


class _Runtime:
    """Objects shared by every command, built once from the config."""

    def __init__(self, cfg: dict):
        self.cfg = cfg
        self.grid = config_mod.build_grid_from(cfg)
        self.kernel = config_mod.build_kernel_from(cfg)
        self.scenario = config_mod.build_scenario_from(cfg)
        self.op = KernelOperator(self.kernel, self.grid)
        self.solver_cfg = config_mod.build_solver_config_from(cfg)
        self._solver = None

    @property
    def solver(self) -> Solver:
        if self._solver is None:
            tab = build_seed(self.scenario, self.op,
                             config_mod.build_seed_spec_from(self.cfg))
            self._solver = Solver(tab, self.solver_cfg)
        return self._solver


_POOL_SOLVER = None


def _sweep_task(args):
    t, xs = args
    slices = _POOL_SOLVER.sweep(t, np.asarray(xs))
    return [(s.t, s.x, s.n, s.rho_p, s.rho_s, s.v_eff, s.u) for s in slices]


def _run_sweeps(solver: Solver, times, xs, workers: int):
    """One warm sweep per time, optionally on forked workers; output order
    is by (t, x) index regardless of scheduling."""
    tasks = [(float(t), xs) for t in times]
    if workers <= 1 or len(tasks) <= 1:
        return [_sweep_inline(solver, t, xs) for t, xs in tasks]
    global _POOL_SOLVER
    _POOL_SOLVER = solver
    try:
        ctx = multiprocessing.get_context("fork")
        with concurrent.futures.ProcessPoolExecutor(
                max_workers=min(workers, len(tasks)), mp_context=ctx) as pool:
            return list(pool.map(_sweep_task, tasks))
    except (ValueError, OSError):
        return [_sweep_inline(solver, t, xs) for t, xs in tasks]
    finally:
        _POOL_SOLVER = None


def _sweep_inline(solver, t, xs):
    slices = solver.sweep(t, np.asarray(xs))
    return [(s.t, s.x, s.n, s.rho_p, s.rho_s, s.v_eff, s.u) for s in slices]


# ---------------------------------------------------------------------------
# commands

def cmd_check(rt: _Runtime, out: Path, workers: int) -> int:
    report = check_assumptions(rt.scenario, rt.op)
    _write_json(out / "assumptions.json", report.to_dict())
    print(f"assumption check: {'pass' if report.verdict else 'fail'}"
          f" (||T sup n0|| = {report.tn_norm:.6g},"
          f" threshold {report.threshold_used:g})")
    if not report.verdict:
        print(f"failed clause: {report.failed_clause}")
        return 3
    return 0


def cmd_seed(rt: _Runtime, out: Path, workers: int) -> int:
    tab = rt.solver.tab
    summary = {
        "x_min": tab.x_min, "x_max": tab.x_max, "x_count": int(tab.x_nodes.size),
        "interpolation": tab.mode, "contraction_rate": tab.rate,
        "sup_n0": tab.sup_n0, "vn_sup": tab.vn_sup,
        "min_slope_A": tab.min_slope_A,
        "bounds": None if tab.bounds is None else {
            "tn_norm": tab.bounds.tn_norm, "r_value": tab.bounds.r_value,
            "upper": tab.bounds.upper},
    }
    _write_json(out / "seed_summary.json", summary)
    nodes = rt.grid.nodes
    rows = ((x, nodes[j], tab.A[i, j], tab.B[i, j], tab.dA[i, j], tab.dB[i, j])
            for i, x in enumerate(tab.x_nodes) for j in range(nodes.size))
    _write_csv(out / "seed_tables.csv",
               ["x", "p", "Xhat0", "B", "one_dr", "n_one_dr"], rows)
    print(f"seed tables: {tab.x_nodes.size} x-nodes, mode {tab.mode}, "
          f"rate {tab.rate:.6g}")
    return 0


def cmd_solve(rt: _Runtime, out: Path, workers: int) -> int:
    sec = rt.cfg.get("solve")
    if sec is None:
        raise ConfigError("config schema violation at $.solve: section required")
    xs = np.linspace(sec["x_min"], sec["x_max"], sec["x_count"])
    nodes = rt.grid.nodes
    per_time = _run_sweeps(rt.solver, sec["times"], xs, workers)
    rows = []
    for batch in per_time:
        for (t, x, n, rho_p, rho_s, v_eff, u) in batch:
            for j in range(nodes.size):
                rows.append((t, x, nodes[j], n[j], rho_p[j], rho_s[j],
                             v_eff[j], u[j]))
    _write_csv(out / "solve.csv",
               ["t", "x", "p", "n", "rho_p", "rho_s", "v_eff", "u"], rows)
    print(f"solved {sum(len(b) for b in per_time)} slices "
          f"at {len(per_time)} times")
    return 0


def cmd_conserve(rt: _Runtime, out: Path, workers: int) -> int:
    sec = rt.cfg.get("conserve")
    if sec is None:
        raise ConfigError("config schema violation at $.conserve: section required")
    weights = {name: weight_values(name, rt.op)
               for name in sec.get("charges", ["one"])}
    entropies = {name: ENTROPY_FUNCTIONS[name]
                 for name in sec.get("entropies", [])}
    report = conservation_report(
        rt.solver, sec["times"], (sec["x_min"], sec["x_max"]),
        sec.get("x_count", 400), weights, entropies)
    summary = {}
    for name, series in sorted(report.items()):
        tag = name.replace("[", "_").replace("]", "").replace(":", "-")
        v0 = series.values[0]
        rows = [(t, v, abs(v - v0) / max(abs(v0), 1e-12))
                for t, v in zip(series.times, series.values)]
        _write_csv(out / f"conserve_{tag}.csv", ["t", "value", "drift"], rows)
        summary[name] = {"relative_drift": series.relative_drift,
                         "initial": v0}
        print(f"{name}: drift {series.relative_drift:.3e}")
    _write_json(out / "conserve_summary.json", summary)
    return 0


def cmd_weakcheck(rt: _Runtime, out: Path, workers: int) -> int:
    sec = rt.cfg.get("weakcheck", {})
    rects = [tuple(r) for r in sec.get("rectangles", [])]
    p_indices = list(sec.get("p_indices", []))
    if "random" in sec:
        rects += config_mod.random_rectangles(sec["random"], rt.scenario)
        rng = np.random.default_rng(sec["random"]["seed"] + 1)
        while len(p_indices) < len(rects):
            p_indices.append(int(rng.integers(0, rt.grid.count)))
    if not rects:
        raise ConfigError("config schema violation at $.weakcheck.rectangles: "
                          "no rectangles given")
    if len(p_indices) < len(rects):
        p_indices += [rt.grid.count // 2] * (len(rects) - len(p_indices))
    tol = sec.get("tolerance", 1e-4)
    edge_points = sec.get("edge_points", 160)
    rows = []
    worst = 0.0
    for rect, p_idx in zip(rects, p_indices):
        res = weak_form_residual(rt.solver, rect, p_idx, edge_points)
        worst = max(worst, abs(res["residual"]))
        rows.append((*rect, p_idx, res["momentum"], res["residual"],
                     res["scale"]))
    _write_csv(out / "weakcheck.csv",
               ["x1", "x2", "t1", "t2", "p_index", "p", "residual", "scale"],
               rows)
    print(f"weak-form residuals: {len(rows)} rectangles, worst {worst:.3e}, "
          f"tolerance {tol:g}")
    return 0 if worst <= tol else 1


def cmd_compare_reference(rt: _Runtime, out: Path, workers: int) -> int:
    sec = rt.cfg.get("compare")
    if sec is None:
        raise ConfigError("config schema violation at $.compare: section required")
    t_end = sec["t_end"]
    window = None
    if "x_min" in sec and "x_max" in sec:
        window = (sec["x_min"], sec["x_max"])
    gaps = []
    for dx in sec["dx_list"]:
        field = integrate_upwind(rt.scenario, rt.op, t_end, dx,
                                 cfl=sec.get("cfl", 0.9), x_window=window)
        rho_ref = fixed_point_rho(rt.solver, t_end, field.x_cells)
        gaps.append(l1_gap(field, rho_ref, rt.op))
        print(f"dx={dx:g}: L1 gap {gaps[-1]:.6e}")
    rows = list(zip(sec["dx_list"], gaps))
    _write_csv(out / "compare_reference.csv", ["dx", "l1_gap"], rows)
    order = convergence_order(sec["dx_list"], gaps) if len(gaps) > 1 else None
    _write_json(out / "compare_summary.json",
                {"t_end": t_end, "dx": list(sec["dx_list"]), "l1_gap": gaps,
                 "order": order})
    if order is not None:
        print(f"measured convergence order: {order:.3f}")
    return 0


def cmd_plotdata(rt: _Runtime, out: Path, workers: int) -> int:
    sec = rt.cfg.get("plotdata")
    if sec is None:
        raise ConfigError("config schema violation at $.plotdata: section required")
    xs = np.linspace(sec["x_min"], sec["x_max"], sec["x_count"])
    probes = sec.get("p_probes", [rt.grid.count // 4, rt.grid.count // 2,
                                  (3 * rt.grid.count) // 4])
    w = rt.grid.weights
    per_time = _run_sweeps(rt.solver, sec["times"], xs, workers)
    for idx, batch in enumerate(per_time):
        path = out / f"profile_t{idx:03d}.dat"
        with open(path, "w") as fh:
            fh.write(f"# t = {_fmt(batch[0][0])}\n")
            fh.write("# x  mass_density  mean_v_eff  " +
                     "  ".join(f"n(p={_fmt(rt.grid.nodes[j])})" for j in probes)
                     + "\n")
            for (t, x, n, rho_p, rho_s, v_eff, u) in batch:
                mass = float(rho_p @ w)
                mean_v = float((rho_p * v_eff) @ w) / mass if mass > 1e-300 else 0.0
                cols = [x, mass, mean_v] + [n[j] for j in probes]
                fh.write(" ".join(_fmt(c) for c in cols) + "\n")
    print(f"wrote {len(per_time)} profile files")
    return 0


# ---------------------------------------------------------------------------

_DISPATCH = {
    "check": cmd_check,
    "seed": cmd_seed,
    "solve": cmd_solve,
    "conserve": cmd_conserve,
    "weakcheck": cmd_weakcheck,
    "compare-reference": cmd_compare_reference,
    "plotdata": cmd_plotdata,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ghd", description="GHD fixed-point solver batch runner")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--workers", type=int,
                        default=int(os.environ.get("GHD_WORKERS", "1")),
                        help="slice-parallel worker count (default: GHD_WORKERS or 1)")
    parser.add_argument("--out", default="ghd_out", help="output directory")
    args = parser.parse_args(argv)
    try:
        cfg = config_mod.load_config(args.config)
        rt = _Runtime(cfg)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return _DISPATCH[args.command](rt, out, max(1, args.workers))
    except (ConfigError, SupportWindowError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except AssumptionError as exc:
        print(f"assumption failure: {exc}", file=sys.stderr)
        return 3
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return 4
    except GHDError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
