"""Linear-model fidelity benchmark.

For every operating point on a guide-vane grid, an LTI model is extracted
at synchronous speed and both models are driven through an ideal gate
step; the torque and head series are compared through normalized mean
absolute errors over a transient window (350 s from the step) and a
steady-state window (the final 50 s of a 500 s run).

The head signal is the spatially averaged penstock head for Francis
plants and the head at the turbine for Kaplan plants; torque errors are
normalized by the nominal torque, head errors by the nominal head.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .circuit import PlantConfig, nonlinear_rhs
from .curves import CharacteristicCurveSet, on_cam
from .exceptions import ConfigError, HydrolinError, SimulationError
from .linearize import DiffSteps, linearize
from .sim import (SimOptions, StepSchedule, Trajectory, find_equilibrium,
                  simulate_linear, simulate_nonlinear)

_TOL = 1e-9  # float fuzz for grid feasibility and window masks

HEAD_PENSTOCK_AVG = "penstock_avg"
HEAD_TURBINE = "turbine"


@dataclass(frozen=True)
class ExperimentGrid:
    """Operating points x gate steps, filtered to the feasible range."""

    y_points: np.ndarray
    dy_points: np.ndarray
    cells: tuple[tuple[float, float], ...]

    def row(self, y0: float) -> list[tuple[float, float]]:
        return [c for c in self.cells if abs(c[0] - y0) <= _TOL]


def build_grid(cfg: PlantConfig, y_start: float = 0.2, y_stop: float = 1.0,
               y_step: float = 0.1, dy_span: float = 0.5,
               dy_step: float = 0.025) -> ExperimentGrid:
    """Protocol grid: 9 openings, 41 steps, post-step opening in range.

    Cells whose target opening y0 + dy leaves the configured operating
    range are excluded.  Ordering is deterministic: y0 outer, dy inner.
    """
    n_y = int(round((y_stop - y_start) / y_step)) + 1
    y_points = y_start + y_step * np.arange(n_y)
    n_dy = 2 * int(round(dy_span / dy_step)) + 1
    dy_points = -dy_span + dy_step * np.arange(n_dy)
    y_min, y_max = cfg.y_range
    cells = []
    for y0 in y_points:
        if not (y_min - _TOL <= y0 <= y_max + _TOL):
            continue
        for dy in dy_points:
            if y_min - _TOL <= y0 + dy <= y_max + _TOL:
                cells.append((float(y0), float(dy)))
    return ExperimentGrid(y_points=y_points, dy_points=dy_points,
                          cells=tuple(cells))


@dataclass(frozen=True)
class ExperimentResult:
    """Normalized MAEs of one (operating point, gate step) cell."""

    y0: float
    dy: float
    mae_T_tr: float
    mae_T_ss: float
    mae_H_tr: float
    mae_H_ss: float
    status: str = "ok"


def error_series(y_ref: np.ndarray, y_hat: np.ndarray, norm: float) -> np.ndarray:
    """Pointwise (reference - estimate) / norm on aligned series."""
    y_ref = np.asarray(y_ref, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y_ref.shape != y_hat.shape:
        raise ValueError(f"misaligned series: {y_ref.shape} vs {y_hat.shape}")
    if not norm > 0.0:
        raise ValueError("normalization constant must be positive")
    return (y_ref - y_hat) / norm


def mae(e: np.ndarray, t: np.ndarray, t0: float, tf: float) -> float:
    """Mean of |e| over samples with t0 <= t <= tf.

    A true mean (sum over the window divided by the sample count), so the
    metric is invariant to window length and sampling step.
    """
    e = np.asarray(e, dtype=float)
    t = np.asarray(t, dtype=float)
    if e.shape != t.shape:
        raise ValueError("error series and time base are misaligned")
    mask = (t >= t0 - _TOL) & (t <= tf + _TOL)
    if not np.any(mask):
        raise ValueError(f"empty MAE window [{t0}, {tf}]")
    return float(np.mean(np.abs(e[mask])))


@dataclass(frozen=True)
class BenchOptions:
    """Benchmark protocol settings (windows per the evaluation procedure)."""

    dt: float = 1.0e-3
    t_end: float = 500.0
    record_every: int = 10
    transient_horizon: float = 350.0
    steady_window: float = 50.0
    head_signal: str | None = None  # default: by turbine kind
    N_rpm: float | None = None      # default: rated (synchronous) speed
    settle_tol: float = 1.0e-3      # normalized |x'| bound at the window edge

    def sim_options(self) -> SimOptions:
        return SimOptions(dt=self.dt, t_end=self.t_end,
                          record_every=self.record_every)

    def resolve_head_signal(self, cfg: PlantConfig) -> str:
        if self.head_signal is not None:
            return self.head_signal
        return HEAD_TURBINE if cfg.is_kaplan else HEAD_PENSTOCK_AVG


@dataclass(frozen=True)
class BenchmarkReport:
    plant: str
    kind: str
    head_signal: str
    grid: ExperimentGrid
    opts: BenchOptions
    results: tuple[ExperimentResult, ...]

    def by_row(self) -> dict[float, list[ExperimentResult]]:
        rows: dict[float, list[ExperimentResult]] = {}
        for res in self.results:
            rows.setdefault(res.y0, []).append(res)
        return rows


def _head_series(traj: Trajectory, signal: str) -> np.ndarray:
    return traj.H_t if signal == HEAD_TURBINE else traj.head_avg


def run_benchmark(cfg: PlantConfig, curves: CharacteristicCurveSet | None = None,
                  grid: ExperimentGrid | None = None,
                  opts: BenchOptions | None = None,
                  steps: DiffSteps | None = None) -> BenchmarkReport:
    """Execute the full operating-point x step protocol.

    Per opening: solve the equilibrium at synchronous speed (pitch from
    the on-cam curve for Kaplan machines), extract the LTI model once,
    then sweep every feasible step, simulating both models from the same
    equilibrium with the generator torque held at its initial value.
    Per-cell failures are recorded in the result status, not raised.
    """
    curves = curves if curves is not None else cfg.curves
    opts = opts or BenchOptions()
    grid = grid or build_grid(cfg)
    signal = opts.resolve_head_signal(cfg)
    sim_opts = opts.sim_options()
    r = cfg.rated
    results: list[ExperimentResult] = []
    t0 = 0.0
    t_tr = t0 + opts.transient_horizon
    t_ss0 = opts.t_end - opts.steady_window
    for y0 in grid.y_points:
        row = grid.row(float(y0))
        if not row:
            continue
        try:
            op = find_equilibrium(cfg, curves, float(y0), N_rpm=opts.N_rpm)
            lin = linearize(cfg, curves, op, steps)
        except HydrolinError as exc:
            results.extend(
                ExperimentResult(y0=c[0], dy=c[1], mae_T_tr=math.nan,
                                 mae_T_ss=math.nan, mae_H_tr=math.nan,
                                 mae_H_ss=math.nan,
                                 status=f"equilibrium failed: {exc}")
                for c in row)
            continue
        for y0_c, dy in row:
            y1 = y0_c + dy
            beta0 = op.beta0
            beta1 = on_cam(cfg.on_cam, min(max(y1, cfg.y_range[0]),
                                           cfg.y_range[1])) if cfg.is_kaplan else None
            sched = StepSchedule(y_before=y0_c, y_after=y1, T_el=op.T_el0,
                                 t_step=t0, beta_before=beta0, beta_after=beta1)
            try:
                nl = simulate_nonlinear(cfg, curves, op.x0, sched, sim_opts)
                li = simulate_linear(lin, op.x0, sched, sim_opts)
            except SimulationError as exc:
                results.append(ExperimentResult(
                    y0=y0_c, dy=dy, mae_T_tr=math.nan, mae_T_ss=math.nan,
                    mae_H_tr=math.nan, mae_H_ss=math.nan,
                    status=f"simulation failed: {exc}"))
                continue
            e_T = error_series(nl.T_t, li.T_t, r.T_n)
            e_H = error_series(_head_series(nl, signal),
                               _head_series(li, signal), r.H_n)
            status = "ok"
            if not _settled(cfg, curves, nl, sched, t_tr, opts.settle_tol):
                status = "unsettled"
            results.append(ExperimentResult(
                y0=y0_c, dy=dy,
                mae_T_tr=mae(e_T, nl.t, t0, t_tr),
                mae_T_ss=mae(e_T, nl.t, t_ss0, opts.t_end),
                mae_H_tr=mae(e_H, nl.t, t0, t_tr),
                mae_H_ss=mae(e_H, nl.t, t_ss0, opts.t_end),
                status=status))
    return BenchmarkReport(plant=cfg.name, kind=cfg.kind, head_signal=signal,
                           grid=grid, opts=opts, results=tuple(results))


def _settled(cfg, curves, traj: Trajectory, sched: StepSchedule, t_check: float,
             tol: float) -> bool:
    """Normalized state velocity at the end of the transient window."""
    i = int(np.searchsorted(traj.t, t_check - _TOL))
    i = min(i, traj.t.size - 1)
    x = traj.states[i]
    y, beta, T_el = sched.at(float(traj.t[i]))
    f = nonlinear_rhs(cfg, curves, x, y, T_el, beta)
    lay = cfg.layout
    r = cfg.rated
    scale = np.empty(lay.dim)
    scale[lay.discharges] = r.Q_bep
    scale[lay.heads] = r.H_n
    scale[lay.i_omega] = r.omega_bep
    return float(np.max(np.abs(f / scale))) <= tol


# ---------------------------------------------------------------------------
# Result files
# ---------------------------------------------------------------------------

RESULTS_HEADER = ["y0", "dy", "mae_T_tr", "mae_T_ss", "mae_H_tr", "mae_H_ss",
                  "status"]

_METRICS = ("mae_T_tr", "mae_T_ss", "mae_H_tr", "mae_H_ss")


def write_results_csv(report: BenchmarkReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RESULTS_HEADER)
        for res in report.results:
            w.writerow([f"{res.y0:.3f}", f"{res.dy:.3f}",
                        f"{res.mae_T_tr:.10e}", f"{res.mae_T_ss:.10e}",
                        f"{res.mae_H_tr:.10e}", f"{res.mae_H_ss:.10e}",
                        res.status])


def read_results_csv(path) -> list[ExperimentResult]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != RESULTS_HEADER:
            raise ConfigError(f"{path}: unexpected results header {header}")
        for row in reader:
            out.append(ExperimentResult(
                y0=float(row[0]), dy=float(row[1]), mae_T_tr=float(row[2]),
                mae_T_ss=float(row[3]), mae_H_tr=float(row[4]),
                mae_H_ss=float(row[5]), status=row[6]))
    return out


def heatmap_matrix(results: list[ExperimentResult], metric: str,
                   y_points: np.ndarray, dy_points: np.ndarray) -> np.ndarray:
    """(step change x opening) matrix of one metric; NaN where infeasible."""
    if metric not in _METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    M = np.full((dy_points.size, y_points.size), np.nan)
    for res in results:
        i = int(np.argmin(np.abs(dy_points - res.dy)))
        j = int(np.argmin(np.abs(y_points - res.y0)))
        M[i, j] = getattr(res, metric)
    return M


def write_heatmap_csv(path, M: np.ndarray, y_points: np.ndarray,
                      dy_points: np.ndarray) -> None:
    """Rows: step change; columns: guide-vane opening; blank = infeasible."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dy"] + [f"{y:.3f}" for y in y_points])
        for i, dy in enumerate(dy_points):
            row = [f"{dy:.3f}"]
            row += ["" if np.isnan(v) else f"{v:.10e}" for v in M[i]]
            w.writerow(row)


def read_heatmap_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of write_heatmap_csv: (dy_points, y_points, matrix)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "dy":
            raise ConfigError(f"{path}: not a heatmap file")
        y_points = np.array([float(v) for v in header[1:]])
        dys = []
        rows = []
        for row in reader:
            dys.append(float(row[0]))
            rows.append([math.nan if v == "" else float(v) for v in row[1:]])
    return np.array(dys), y_points, np.array(rows)


def render_heatmaps_svg(results_csv_path, out_dir,
                        y_points: np.ndarray, dy_points: np.ndarray) -> list[str]:
    """Render one SVG per metric, strictly from the results CSV."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from pathlib import Path

    results = read_results_csv(results_csv_path)
    out_paths = []
    titles = {"mae_T_tr": "torque MAE, transient",
              "mae_T_ss": "torque MAE, steady state",
              "mae_H_tr": "head MAE, transient",
              "mae_H_ss": "head MAE, steady state"}
    for metric in _METRICS:
        M = heatmap_matrix(results, metric, y_points, dy_points)
        fig, ax = plt.subplots(figsize=(5.0, 4.0))
        pc = ax.pcolormesh(y_points, dy_points, M, shading="nearest")
        fig.colorbar(pc, ax=ax, label="MAE (pu)")
        ax.set_xlabel("guide-vane opening y0 (pu)")
        ax.set_ylabel("step change dy (pu)")
        ax.set_title(titles[metric])
        path = Path(out_dir) / f"heatmap_{metric}.svg"
        fig.savefig(path, format="svg")
        plt.close(fig)
        out_paths.append(str(path))
    return out_paths
