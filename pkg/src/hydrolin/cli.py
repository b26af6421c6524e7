"""Command-line front end.

Subcommands: validate, simulate, linearize, bench.  Every command that
writes files drops a manifest.json next to its outputs recording the
exact invocation.  Exit codes: 0 success, 1 validation failure, 2 runtime
simulation failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, bench as bench_mod, config as config_mod, sim as sim_mod
from .curves import on_cam
from .exceptions import ConfigError, HydrolinError
from .linearize import linear_model_dict, linearize
from .sim import SimOptions, StepSchedule, find_equilibrium

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def _add_common(p: argparse.ArgumentParser, needs_out: bool) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="plant configuration JSON file")
    src.add_argument("--plant", choices=config_mod.BUNDLED_PLANTS,
                     help="bundled example plant")
    if needs_out:
        p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--seed", type=int, default=None,
                   help="reserved; recorded in the manifest")
    p.add_argument("--dt", type=float, default=None, help="integration step (s)")
    p.add_argument("--t-end", type=float, default=None, help="horizon (s)")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hydrolin",
                                description="Hydropower plant simulation and "
                                            "linear-model toolkit")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check a configuration file")
    _add_common(v, needs_out=False)

    s = sub.add_parser("simulate", help="run one time-domain simulation")
    _add_common(s, needs_out=True)
    s.add_argument("--model", choices=["nonlinear", "linear"], default="nonlinear")
    s.add_argument("--y0", type=float, required=True, help="initial opening (pu)")
    s.add_argument("--step-size", type=float, default=0.0, help="gate step (pu)")
    s.add_argument("--step-at", type=float, default=0.0, help="step time (s)")
    s.add_argument("--n-rpm", type=float, default=None,
                   help="equilibrium speed (default: rated)")
    s.add_argument("--record-every", type=int, default=10)

    l = sub.add_parser("linearize", help="emit an LTI model around a point")
    _add_common(l, needs_out=True)
    l.add_argument("--y0", type=float, required=True)
    l.add_argument("--n-rpm", type=float, default=None)

    b = sub.add_parser("bench", help="run the fidelity benchmark")
    _add_common(b, needs_out=True)
    b.add_argument("--record-every", type=int, default=10)
    b.add_argument("--svg", action="store_true", help="render heatmap SVGs")
    return p


def _load(args) -> tuple:
    path = config_mod.bundled_config_path(args.plant) if args.plant \
        else Path(args.config)
    cfg = config_mod.load_config(path)
    return cfg, path


def _write_manifest(out_dir: Path, args, config_path: Path) -> None:
    options = {k: v for k, v in vars(args).items()
               if k not in ("command",) and v is not None}
    options["config"] = str(config_path)
    manifest = {
        "tool": "hydrolin",
        "version": __version__,
        "command": args.command,
        "config": str(config_path),
        "options": options,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "out_dir": str(out_dir),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2,
                                                      sort_keys=True) + "\n")


def cmd_validate(args) -> int:
    try:
        cfg, path = _load(args)
    except ConfigError as exc:
        print(f"FAIL: {exc}")
        return EXIT_CONFIG
    lay = cfg.layout
    print(f"OK: {path}")
    print(f"  plant: {cfg.name} ({cfg.kind}), net head {cfg.net_head:g} m, "
          f"{cfg.n_elements} penstock elements (state dimension {lay.dim})")
    print(f"  curves: theta [{cfg.curves.theta_grid[0]:.4g}, "
          f"{cfg.curves.theta_grid[-1]:.4g}], y [{cfg.curves.y_grid[0]:g}, "
          f"{cfg.curves.y_grid[-1]:g}]"
          + (f", beta [{cfg.curves.beta_grid[0]:g}, {cfg.curves.beta_grid[-1]:g}]"
             if cfg.is_kaplan else ""))
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        cfg, path = _load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    dt = args.dt if args.dt is not None else sim_mod.default_dt(cfg)
    t_end = args.t_end if args.t_end is not None else 100.0
    try:
        opts = SimOptions(dt=dt, t_end=t_end, record_every=args.record_every)
        op = find_equilibrium(cfg, cfg.curves, args.y0, N_rpm=args.n_rpm)
        y1 = args.y0 + args.step_size
        beta1 = on_cam(cfg.on_cam, y1) if cfg.is_kaplan else None
        sched = StepSchedule(y_before=args.y0, y_after=y1, T_el=op.T_el0,
                             t_step=args.step_at, beta_before=op.beta0,
                             beta_after=beta1)
        if args.model == "linear":
            lin = linearize(cfg, cfg.curves, op)
            traj = sim_mod.simulate_linear(lin, op.x0, sched, opts)
        else:
            traj = sim_mod.simulate_nonlinear(cfg, cfg.curves, op.x0, sched, opts)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HydrolinError as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    sim_mod.save_trajectory_csv(traj, out_dir / "trajectory.csv")
    _write_manifest(out_dir, args, path)
    print(f"wrote {out_dir / 'trajectory.csv'} ({traj.t.size} samples)")
    return EXIT_OK


def cmd_linearize(args) -> int:
    try:
        cfg, path = _load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        op = find_equilibrium(cfg, cfg.curves, args.y0, N_rpm=args.n_rpm)
        lin = linearize(cfg, cfg.curves, op)
    except HydrolinError as exc:
        print(f"linearization error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    model_path = out_dir / "linear_model.json"
    model_path.write_text(json.dumps(linear_model_dict(lin), indent=2) + "\n")
    _write_manifest(out_dir, args, path)
    print(f"wrote {model_path}")
    return EXIT_OK


def cmd_bench(args) -> int:
    try:
        cfg, path = _load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    opts = bench_mod.BenchOptions(
        dt=args.dt if args.dt is not None else 1.0e-3,
        t_end=args.t_end if args.t_end is not None else 500.0,
        record_every=args.record_every,
    )
    try:
        report = bench_mod.run_benchmark(cfg, opts=opts)
    except HydrolinError as exc:
        print(f"benchmark error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    results_path = out_dir / "results.csv"
    bench_mod.write_results_csv(report, results_path)
    for metric in ("mae_T_tr", "mae_T_ss", "mae_H_tr", "mae_H_ss"):
        M = bench_mod.heatmap_matrix(list(report.results), metric,
                                     report.grid.y_points, report.grid.dy_points)
        bench_mod.write_heatmap_csv(out_dir / f"heatmap_{metric}.csv", M,
                                    report.grid.y_points, report.grid.dy_points)
    if args.svg:
        bench_mod.render_heatmaps_svg(results_path, out_dir,
                                      report.grid.y_points, report.grid.dy_points)
    _write_manifest(out_dir, args, path)
    n_ok = sum(1 for r in report.results if r.status == "ok")
    print(f"wrote {results_path}: {len(report.results)} cells, {n_ok} ok")
    return EXIT_OK


_COMMANDS = {
    "validate": cmd_validate,
    "simulate": cmd_simulate,
    "linearize": cmd_linearize,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return _COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
