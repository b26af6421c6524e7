"""Time-domain integration and steady-state solving.

Both the nonlinear and the linear plant models integrate with a fixed-step
classical 4th-order Runge-Kutta scheme: the hydroacoustic dynamics are
oscillatory rather than stiff, and a fixed step keeps benchmark timing
deterministic and error windows exact.  Inputs are held constant over each
step; stepwise gate changes are ideal (no servo model) and should be
aligned to the step grid.

Step-input runs dispatch to compiled kernels; arbitrary schedules (any
callable t -> (y, beta, T_el)) use a plain-python loop with identical
semantics.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels, circuit
from .circuit import RPM_PER_RAD, PlantConfig
from .curves import CharacteristicCurveSet, on_cam, turbine_head, turbine_torque
from .exceptions import (ConfigError, CurveDomainError, EquilibriumError,
                         SimulationError)
from .linearize import LinearStateSpace, OperatingPoint, equilibrium_residual

#: residual bound (normalized, 1/s) certified by find_equilibrium
RESIDUAL_TOL = 1.0e-9


def default_dt(cfg: PlantConfig) -> float:
    """Default step: 1 ms, tightened when the wave transit asks for more."""
    return min(1.0e-3, 0.2 * cfg.dx / cfg.wave_speed)


@dataclass(frozen=True)
class SimOptions:
    """Fixed-step integration settings."""

    dt: float
    t_end: float
    record_every: int = 1

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ConfigError("dt must be positive")
        if self.t_end < self.dt:
            raise ConfigError("t_end must be at least one step")
        if self.record_every < 1:
            raise ConfigError("record_every must be >= 1")

    def check_wave_resolution(self, cfg: PlantConfig) -> None:
        bound = 0.5 * cfg.dx / cfg.wave_speed
        if self.dt > bound:
            raise ConfigError(
                f"dt={self.dt} exceeds the wave-resolution bound 0.5*dx/a={bound:.4g}")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_end / self.dt)))


@dataclass(frozen=True)
class StepSchedule:
    """Piecewise-constant input: one ideal step at t_step.

    Gate (and, for Kaplan machines, pitch) switch from the *_before to the
    *_after values at t >= t_step; the generator load torque T_el is
    constant throughout.
    """

    y_before: float
    y_after: float
    T_el: float
    t_step: float = 0.0
    beta_before: float | None = None
    beta_after: float | None = None

    @classmethod
    def constant(cls, y: float, T_el: float, beta: float | None = None):
        return cls(y_before=y, y_after=y, T_el=T_el, t_step=0.0,
                   beta_before=beta, beta_after=beta)

    def at(self, t: float):
        if t >= self.t_step:
            return self.y_after, self.beta_after, self.T_el
        return self.y_before, self.beta_before, self.T_el


@dataclass(frozen=True)
class Trajectory:
    """Recorded simulation output on a uniform sample grid."""

    t: np.ndarray
    states: np.ndarray    # (m, 2n+2)
    H_t: np.ndarray       # turbine head series (m)
    T_t: np.ndarray       # turbine torque series (N*m)
    head_avg: np.ndarray  # spatially averaged penstock head (m)

    def __post_init__(self):
        m = self.t.shape[0]
        for name in ("states", "H_t", "T_t", "head_avg"):
            if getattr(self, name).shape[0] != m:
                raise ValueError(f"trajectory series {name} misaligned with t")
        if m > 1 and not np.all(np.diff(self.t) > 0.0):
            raise ValueError("sample times must be strictly increasing")

    @property
    def n_elements(self) -> int:
        return (self.states.shape[1] - 2) // 2

    @property
    def omega(self) -> np.ndarray:
        return self.states[:, -1]


# ---------------------------------------------------------------------------
# Steady state
# ---------------------------------------------------------------------------

def _static_balance_root(F, a: float, b: float, x_init: float, ftol: float,
                         xtol: float, max_iter: int = 100):
    """Damped Newton on a bracketed decreasing balance F(a) > 0 > F(b)."""
    x = min(max(x_init, a), b)
    fx = F(x)
    probe = max(1e-8 * (b - a), 1e-300)
    a0, b0 = a, b
    for _ in range(max_iter):
        if abs(fx) <= ftol:
            return x, fx
        if fx > 0.0:
            a = x
        else:
            b = x
        if b - a <= xtol:
            return x, fx
        lo = max(x - probe, a0)
        hi = min(x + probe, b0)
        dF = (F(hi) - F(lo)) / (hi - lo)
        x_new = x - fx / dF if dF != 0.0 else 0.5 * (a + b)
        if not (a < x_new < b) or not math.isfinite(x_new):
            x_new = 0.5 * (a + b)
        f_new = F(x_new)
        if abs(f_new) >= abs(fx):
            # Newton stalled: bisect, which always shrinks the bracket
            x_new = 0.5 * (a + b)
            f_new = F(x_new)
        x, fx = x_new, f_new
    raise EquilibriumError(
        f"static balance did not converge after {max_iter} iterations; "
        f"last residual {fx:.3e} m at Q={x:.6g}")


def find_equilibrium(cfg: PlantConfig, curves: CharacteristicCurveSet, y: float,
                     N_rpm: float | None = None,
                     beta: float | None = None) -> OperatingPoint:
    """Steady state at a gate opening and (synchronous) speed.

    Flows equalize along the penstock, heads follow the static friction
    chain, and the discharge solves the head balance
    H_r - H_d - loss(Q) = H_t(Q, N, y[, beta]) by damped Newton iteration.
    The balancing electrical torque is the turbine torque at the solution.
    """
    r = cfg.rated
    N0 = r.N_bep if N_rpm is None else N_rpm
    if not N0 > 0.0:
        raise EquilibriumError("target speed must be positive")
    y_min, y_max = cfg.y_range
    if not (y_min - 1e-9 <= y <= y_max + 1e-9):
        raise EquilibriumError(f"y={y} outside operating range [{y_min}, {y_max}]")
    if cfg.is_kaplan and beta is None:
        beta = on_cam(cfg.on_cam, y)

    kf = cfg.n_elements * cfg.friction_coeff  # total loss = kf * Q|Q|
    h_net = cfg.net_head

    def F(Q):
        return h_net - kf * Q * abs(Q) - turbine_head(curves, Q, N0, y, beta)

    nn = N0 / r.N_bep
    th_lo = max(float(curves.theta_grid[0]), 1e-6)
    th_hi = min(float(curves.theta_grid[-1]), 0.5 * math.pi - 1e-9)
    if th_lo >= th_hi:
        raise EquilibriumError("curve grid has no forward-flow sector")
    q_lo = nn * math.tan(th_lo) * r.Q_bep
    q_hi = nn * math.tan(th_hi) * r.Q_bep
    try:
        f_lo, f_hi = F(q_lo), F(q_hi)
    except CurveDomainError as exc:
        raise EquilibriumError(f"balance probe left the curve domain: {exc}") from exc
    if not (f_lo > 0.0 > f_hi):
        raise EquilibriumError(
            f"no steady state inside the curve domain at y={y}, N={N0} rpm "
            f"(balance spans [{f_hi:.3g}, {f_lo:.3g}] m)")
    Q, _ = _static_balance_root(F, q_lo, q_hi, x_init=nn * r.Q_bep,
                                ftol=1e-13 * max(h_net, 1.0),
                                xtol=1e-14 * r.Q_bep)

    n = cfg.n_elements
    drop = cfg.friction_coeff * abs(Q) * Q  # head drop per full element
    heads = cfg.H_r - 0.5 * drop - drop * np.arange(n, dtype=float)
    x0 = np.concatenate([np.full(n + 1, Q), heads, [N0 / RPM_PER_RAD]])
    op = OperatingPoint(y0=y, N0=N0, Q_t0=Q, x0=x0,
                        H_t0=turbine_head(curves, Q, N0, y, beta),
                        T_t0=turbine_torque(curves, Q, N0, y, beta),
                        beta0=beta)
    res = equilibrium_residual(cfg, curves, op)
    if res > RESIDUAL_TOL:
        raise EquilibriumError(f"equilibrium residual {res:.3e} exceeds {RESIDUAL_TOL}")
    return op


# ---------------------------------------------------------------------------
# Nonlinear simulation
# ---------------------------------------------------------------------------

def _kernel_curve_args(curves: CharacteristicCurveSet):
    if curves.analytic is not None:
        mode = 1 if curves.is_kaplan else 0
        cp = curves.analytic.kernel_params()
    else:
        mode = 3 if curves.is_kaplan else 2
        cp = np.zeros(13)
    tg, yg = curves.theta_grid, curves.y_grid
    if curves.is_kaplan:
        bg = curves.beta_grid
        WH2 = WB2 = np.zeros((2, 2))
        WH3, WB3 = curves.WH, curves.WB
    else:
        bg = np.array([0.0, 1.0])
        WH2, WB2 = curves.WH, curves.WB
        WH3 = WB3 = np.zeros((2, 2, 2))
    return mode, cp, tg, yg, bg, WH2, WB2, WH3, WB3


def _kernel_plant_args(cfg: PlantConfig):
    el = circuit.rlc_params(cfg, 0.0)
    pp = np.array([el.L, el.C, cfg.friction_coeff, cfg.H_r, cfg.H_d, cfg.inertia])
    r = cfg.rated
    rr = np.array([r.Q_bep, r.N_bep, r.H_bep, r.T_n])
    return pp, rr


def _check_x_init(cfg: PlantConfig, x_init) -> np.ndarray:
    x = np.asarray(x_init, dtype=np.float64)
    if x.shape != (cfg.layout.dim,):
        raise ConfigError(f"initial state must have shape ({cfg.layout.dim},)")
    return x.copy()


def _schedule_beta(cfg: PlantConfig, sched: StepSchedule) -> tuple[float, float]:
    if cfg.is_kaplan:
        b0 = sched.beta_before
        b1 = sched.beta_after
        if b0 is None or b1 is None:
            raise ConfigError("Kaplan simulation needs beta_before/beta_after")
        return b0, b1
    return 0.0, 0.0


def simulate_nonlinear(cfg: PlantConfig, curves: CharacteristicCurveSet,
                       x_init, schedule, opts: SimOptions) -> Trajectory:
    """Integrate the full nonlinear plant model.

    `schedule` is a StepSchedule (compiled fast path) or a callable
    t -> (y, beta, T_el) evaluated once per step.  Leaving the curve
    domain mid-run raises SimulationError with the time stamp and the
    offending state.
    """
    opts.check_wave_resolution(cfg)
    x0 = _check_x_init(cfg, x_init)
    n_steps = opts.n_steps
    rec = opts.record_every
    if isinstance(schedule, StepSchedule):
        y_min, y_max = cfg.y_range
        for y in (schedule.y_before, schedule.y_after):
            if not (y_min - 1e-9 <= y <= y_max + 1e-9):
                raise ConfigError(f"guide vane y={y} outside operating range "
                                  f"[{y_min}, {y_max}]")
        b0, b1 = _schedule_beta(cfg, schedule)
        k_step = 0 if schedule.t_step <= 0.0 else int(round(schedule.t_step / opts.dt))
        pp, rr = _kernel_plant_args(cfg)
        mode, cp, tg, yg, bg, WH2, WB2, WH3, WB3 = _kernel_curve_args(curves)
        xs, hs, ts, ha, err, x_fail = _kernels.rk4_nonlinear(
            x0, opts.dt, n_steps, rec, k_step,
            schedule.y_before, schedule.y_after, b0, b1, schedule.T_el,
            cfg.n_elements, pp, mode, cp, tg, yg, bg, WH2, WB2, WH3, WB3, rr)
        if err >= 0:
            raise SimulationError(
                f"state left the curve domain at t={err * opts.dt:.6g} s; "
                f"state={np.array2string(x_fail, precision=6)}")
        t = np.arange(xs.shape[0]) * (rec * opts.dt)
        return Trajectory(t=t, states=xs, H_t=hs, T_t=ts, head_avg=ha)
    return _simulate_nonlinear_python(cfg, curves, x0, schedule, opts)


def _simulate_nonlinear_python(cfg, curves, x0, schedule, opts):
    sched_at = schedule.at if isinstance(schedule, StepSchedule) else schedule
    n_steps, rec, dt = opts.n_steps, opts.record_every, opts.dt
    lay = cfg.layout
    n_rec = n_steps // rec + 1
    xs = np.empty((n_rec, lay.dim))
    hs = np.empty(n_rec)
    ts = np.empty(n_rec)
    ha = np.empty(n_rec)
    x = x0
    m = 0
    for k in range(n_steps + 1):
        t = k * dt
        y, beta, T_el = sched_at(t)
        try:
            if k % rec == 0:
                Q_t = float(x[lay.i_turbine])
                N = lay.speed_rpm(x)
                xs[m] = x
                hs[m] = turbine_head(curves, Q_t, N, y, beta)
                ts[m] = turbine_torque(curves, Q_t, N, y, beta)
                ha[m] = float(np.mean(x[lay.heads]))
                m += 1
            if k == n_steps:
                break
            k1 = circuit.nonlinear_rhs(cfg, curves, x, y, T_el, beta)
            k2 = circuit.nonlinear_rhs(cfg, curves, x + 0.5 * dt * k1, y, T_el, beta)
            k3 = circuit.nonlinear_rhs(cfg, curves, x + 0.5 * dt * k2, y, T_el, beta)
            k4 = circuit.nonlinear_rhs(cfg, curves, x + dt * k3, y, T_el, beta)
        except CurveDomainError as exc:
            raise SimulationError(
                f"state left the curve domain at t={t:.6g} s "
                f"(state={np.array2string(x, precision=6)}): {exc}") from exc
        x = x + dt / 6.0 * (k1 + 2.0 * (k2 + k3) + k4)
    t = np.arange(n_rec) * (rec * dt)
    return Trajectory(t=t, states=xs, H_t=hs, T_t=ts, head_avg=ha)


# ---------------------------------------------------------------------------
# Linear simulation
# ---------------------------------------------------------------------------

def _rk4_step_matrices(A: np.ndarray, dt: float):
    """RK4 one-step map for x' = A x + c: x+ = Phi x + Psi c (exact)."""
    eye = np.eye(A.shape[0])
    Z = dt * A
    Z2 = Z @ Z
    Z3 = Z2 @ Z
    Z4 = Z3 @ Z
    Phi = eye + Z + Z2 / 2.0 + Z3 / 6.0 + Z4 / 24.0
    Psi = dt * (eye + Z / 2.0 + Z2 / 6.0 + Z3 / 24.0)
    return Phi, Psi


def simulate_linear(lin: LinearStateSpace, x_init, schedule,
                    opts: SimOptions) -> Trajectory:
    """Integrate the LTI model with the same stepping as the nonlinear path.

    Head and torque series come from the first-order turbine expressions
    evaluated along the state history.
    """
    x0 = np.asarray(x_init, dtype=np.float64)
    if x0.shape != (lin.A.shape[0],):
        raise ConfigError(f"initial state must have shape ({lin.A.shape[0]},)")
    n_steps, rec, dt = opts.n_steps, opts.record_every, opts.dt
    Phi, Psi = _rk4_step_matrices(lin.A, dt)
    PsiB = Psi @ lin.B
    if isinstance(schedule, StepSchedule):
        if lin.is_kaplan:
            b0, b1 = schedule.beta_before, schedule.beta_after
            if b0 is None or b1 is None:
                raise ConfigError("Kaplan simulation needs beta_before/beta_after")
        else:
            b0 = b1 = None
        u0 = lin.input_vector(schedule.y_before, schedule.T_el, b0)
        u1 = lin.input_vector(schedule.y_after, schedule.T_el, b1)
        k_step = 0 if schedule.t_step <= 0.0 else int(round(schedule.t_step / dt))
        xs = _kernels.rk4_linear(Phi, PsiB @ u0, PsiB @ u1, k_step,
                                 x0.copy(), n_steps, rec)
        ys = np.where(np.arange(xs.shape[0]) * rec >= k_step,
                      schedule.y_after, schedule.y_before)
        if lin.is_kaplan:
            betas = np.where(np.arange(xs.shape[0]) * rec >= k_step, b1, b0)
        else:
            betas = None
    else:
        n_rec = n_steps // rec + 1
        xs = np.empty((n_rec, x0.size))
        ys = np.empty(n_rec)
        betas = np.empty(n_rec) if lin.is_kaplan else None
        x = x0
        m = 0
        for k in range(n_steps + 1):
            y, beta, T_el = schedule(k * dt)
            if k % rec == 0:
                xs[m] = x
                ys[m] = y
                if betas is not None:
                    betas[m] = beta
                m += 1
            if k == n_steps:
                break
            x = Phi @ x + PsiB @ lin.input_vector(y, T_el, beta)
    H, T = lin.outputs(xs, ys, betas)
    t = np.arange(xs.shape[0]) * (rec * dt)
    return Trajectory(t=t, states=xs, H_t=H, T_t=T,
                      head_avg=lin.head_average(xs))


# ---------------------------------------------------------------------------
# Trajectory CSV interchange
# ---------------------------------------------------------------------------

def save_trajectory_csv(traj: Trajectory, path) -> None:
    """Columns: t, Q_1..Q_{n+1}, h_1..h_n, omega, H_t, T_t, head_avg."""
    n = traj.n_elements
    header = (["t"] + [f"Q_{i + 1}" for i in range(n + 1)]
              + [f"h_{j + 1}" for j in range(n)] + ["omega", "H_t", "T_t", "head_avg"])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(traj.t.size):
            row = [repr(float(traj.t[i]))] + [repr(float(v)) for v in traj.states[i]]
            row += [repr(float(traj.H_t[i])), repr(float(traj.T_t[i])),
                    repr(float(traj.head_avg[i]))]
            w.writerow(row)


def read_trajectory_csv(path) -> Trajectory:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(v) for v in row] for row in reader])
    if not header or header[0] != "t" or header[-1] != "head_avg":
        raise ConfigError(f"{path}: not a trajectory file")
    return Trajectory(t=data[:, 0], states=data[:, 1:-3], H_t=data[:, -3],
                      T_t=data[:, -2], head_avg=data[:, -1])
