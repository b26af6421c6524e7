"""Turbine characteristic curves in polar form.

Hill-chart data for Francis and Kaplan machines is stored as a pair of
dimensionless surfaces -- one for head, one for torque -- over a polar
angle, the guide-vane opening and, for Kaplan units, the blade pitch.
The polar angle folds normalized discharge and speed into a single
coordinate, which keeps the surfaces single-valued through the S-shaped
region of a raw hill chart.

Working variables:

* ``q = Q_t / Q_bep`` and ``nn = N / N_bep`` -- discharge and speed in
  per-unit of the best-efficiency point (BEP),
* ``theta = atan2(q, nn)`` -- polar angle in radians,
* ``WH(theta, y[, beta])`` and ``WB(theta, y[, beta])`` -- head and torque
  surfaces, normalized so both equal 1/2 at the BEP.

Inverting the transform gives physical quantities::

    H_t = H_bep * WH(theta, y[, beta]) * (q^2 + nn^2)
    T_t = T_n  * WB(theta, y[, beta]) * (q^2 + nn^2)

Two surface backings are supported:

* tabulated grids evaluated by multilinear interpolation (exact at grid
  nodes, hard error outside the grid -- extrapolated hill charts produce
  physically meaningless torque), and
* a deterministic closed-form synthetic generator with low-order
  polynomial surfaces and exact analytic partial derivatives.  Curve sets
  built from it evaluate the closed form directly, so they are smooth;
  the tabulated arrays are still stored for inspection, export and
  interpolation-error studies.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import ConfigError, CurveDomainError, DegenerateOriginError

#: Polar angle of the best-efficiency point: q = nn = 1 by construction.
THETA_BEP = math.pi / 4.0

FRANCIS = "francis"
KAPLAN = "kaplan"


@dataclass(frozen=True)
class RatedValues:
    """Rated / best-efficiency-point quantities of one machine.

    Attributes:
        Q_bep: discharge at the best efficiency point (m^3/s)
        N_bep: rotational speed at the BEP (rpm)
        H_bep: turbine head at the BEP (m)
        T_n:   nominal torque (N*m)
        H_n:   nominal head used for error normalization (m)
        D_n:   turbine reference diameter (m)
    """

    Q_bep: float
    N_bep: float
    H_bep: float
    T_n: float
    H_n: float
    D_n: float

    def __post_init__(self):
        for name in ("Q_bep", "N_bep", "H_bep", "T_n", "H_n", "D_n"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"rated value {name} must be strictly positive")

    @property
    def omega_bep(self) -> float:
        """BEP angular speed in rad/s."""
        return self.N_bep * math.pi / 30.0


@dataclass(frozen=True)
class UnitVariables:
    """Similarity-scaled turbine quantities (head and diameter removed)."""

    N11: float  # rpm * m / sqrt(m)
    Q11: float  # m^3/s / (m^2 * sqrt(m))
    T11: float | None = None  # N*m / (m^2 * m); only when torque was supplied


def unit_variables(Q_t: float, N: float, H_t: float, D_n: float,
                   T_t: float | None = None) -> UnitVariables:
    """Unit variables of an operating condition.

    N11 = N*D_n/sqrt(H_t), Q11 = Q_t/(D_n^2*sqrt(H_t)) and, when a torque
    is supplied, T11 = T_t/(D_n^2*H_t).  Defined only for H_t > 0.
    """
    if not H_t > 0.0:
        raise CurveDomainError(f"unit variables undefined for head H_t={H_t} <= 0")
    if not D_n > 0.0:
        raise CurveDomainError(f"reference diameter must be positive, got {D_n}")
    root_h = math.sqrt(H_t)
    n11 = N * D_n / root_h
    q11 = Q_t / (D_n * D_n * root_h)
    t11 = None if T_t is None else T_t / (D_n * D_n * H_t)
    return UnitVariables(N11=n11, Q11=q11, T11=t11)


def polar_angle(q_norm: float, n_norm: float) -> float:
    """Polar angle of a per-unit (discharge, speed) pair, in (-pi, pi].

    Uses the two-argument arctangent so zero speed (runaway toward
    theta = pi/2) and reverse quadrants are well defined; the transform
    degenerates only at the exact origin.
    """
    if q_norm == 0.0 and n_norm == 0.0:
        raise DegenerateOriginError("polar angle undefined at Q = 0, N = 0")
    return math.atan2(q_norm, n_norm)


# ---------------------------------------------------------------------------
# Closed-form synthetic surfaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SyntheticSurface:
    """Deterministic closed-form hill-chart surfaces.

    The head surface behaves like an opening-dependent orifice law and the
    torque surface like that law times a speed ratio and an efficiency
    bell, all reduced to low-order polynomials:

        WH = 1/2 * (theta^2 + c) / (theta_bep^2 + c) * g(y) * k(beta)
        WB = 1/2 * (theta / theta_bep)^3 * g(y) * k(beta) * E(theta, y, beta)

    with cubic gate/blade factors g, k (both 1 at the BEP) and a quadratic
    efficiency factor E centered on the BEP angle and, for Kaplan
    machines, on the on-cam pitch.  Both surfaces equal exactly 1/2 at the
    BEP, so inversion reproduces H_bep and T_n there.

    All partial derivatives are available in closed form; synthetic sets
    are the ground truth for every test that needs analytic derivatives.
    """

    kind: str
    y_bep: float
    theta_floor: float  # additive constant keeping WH > 0 at theta = 0
    gate_poly: tuple[float, float, float]  # cubic coefficients of g(y)
    eff_theta: float
    eff_y: float
    beta_bep: float | None = None
    blade_poly: tuple[float, float, float] | None = None  # cubic coeffs of k(beta)
    eff_beta: float = 0.0
    cam_slope: float = 0.0

    def __post_init__(self):
        if self.kind not in (FRANCIS, KAPLAN):
            raise ConfigError(f"unknown turbine kind {self.kind!r}")
        if not self.theta_floor > 0.0:
            raise ConfigError("theta_floor must be positive (keeps WH > 0)")
        if self.kind == KAPLAN and (self.beta_bep is None or self.blade_poly is None):
            raise ConfigError("Kaplan synthetic surfaces need beta_bep and blade_poly")

    @property
    def is_kaplan(self) -> bool:
        return self.kind == KAPLAN

    # -- building blocks ----------------------------------------------------

    def gate_factor(self, y):
        b1, b2, b3 = self.gate_poly
        d = self.y_bep - np.asarray(y, dtype=float)
        return 1.0 + b1 * d + b2 * d * d + b3 * d * d * d

    def gate_factor_dy(self, y):
        b1, b2, b3 = self.gate_poly
        d = self.y_bep - np.asarray(y, dtype=float)
        return -(b1 + 2.0 * b2 * d + 3.0 * b3 * d * d)

    def blade_factor(self, beta):
        if not self.is_kaplan:
            return 1.0
        k1, k2, k3 = self.blade_poly
        d = self.beta_bep - np.asarray(beta, dtype=float)
        return 1.0 + k1 * d + k2 * d * d + k3 * d * d * d

    def blade_factor_dbeta(self, beta):
        k1, k2, k3 = self.blade_poly
        d = self.beta_bep - np.asarray(beta, dtype=float)
        return -(k1 + 2.0 * k2 * d + 3.0 * k3 * d * d)

    def cam(self, y):
        """On-cam blade pitch as a function of the guide vane (closed form)."""
        return self.beta_bep + self.cam_slope * (np.asarray(y, dtype=float) - self.y_bep)

    def efficiency(self, theta, y, beta=None):
        theta = np.asarray(theta, dtype=float)
        y = np.asarray(y, dtype=float)
        e = 1.0 - self.eff_theta * (theta - THETA_BEP) ** 2 \
            - self.eff_y * (y - self.y_bep) ** 2
        if self.is_kaplan:
            e = e - self.eff_beta * (np.asarray(beta, dtype=float) - self.cam(y)) ** 2
        return e

    # -- surfaces and their partials ----------------------------------------

    def _theta_shape(self, theta):
        c = self.theta_floor
        theta = np.asarray(theta, dtype=float)
        return (theta * theta + c) / (THETA_BEP * THETA_BEP + c)

    def wh(self, theta, y, beta=None):
        return 0.5 * self._theta_shape(theta) * self.gate_factor(y) * self.blade_factor(beta)

    def wb(self, theta, y, beta=None):
        theta = np.asarray(theta, dtype=float)
        cube = (theta / THETA_BEP) ** 3
        return 0.5 * cube * self.gate_factor(y) * self.blade_factor(beta) \
            * self.efficiency(theta, y, beta)

    def wh_dtheta(self, theta, y, beta=None):
        c = self.theta_floor
        theta = np.asarray(theta, dtype=float)
        return theta / (THETA_BEP * THETA_BEP + c) \
            * self.gate_factor(y) * self.blade_factor(beta)

    def wh_dy(self, theta, y, beta=None):
        return 0.5 * self._theta_shape(theta) * self.gate_factor_dy(y) * self.blade_factor(beta)

    def wh_dbeta(self, theta, y, beta):
        return 0.5 * self._theta_shape(theta) * self.gate_factor(y) * self.blade_factor_dbeta(beta)

    def wb_dtheta(self, theta, y, beta=None):
        theta = np.asarray(theta, dtype=float)
        gk = self.gate_factor(y) * self.blade_factor(beta)
        cube = (theta / THETA_BEP) ** 3
        d_eff = -2.0 * self.eff_theta * (theta - THETA_BEP)
        return 0.5 * gk * (3.0 * theta * theta / THETA_BEP ** 3
                           * self.efficiency(theta, y, beta) + cube * d_eff)

    def wb_dy(self, theta, y, beta=None):
        theta = np.asarray(theta, dtype=float)
        y = np.asarray(y, dtype=float)
        cube = (theta / THETA_BEP) ** 3
        kb = self.blade_factor(beta)
        d_eff = -2.0 * self.eff_y * (y - self.y_bep)
        if self.is_kaplan:
            # the efficiency bell tracks the on-cam pitch, so y moves its center
            d_eff = d_eff + 2.0 * self.eff_beta * self.cam_slope \
                * (np.asarray(beta, dtype=float) - self.cam(y))
        return 0.5 * cube * kb * (self.gate_factor_dy(y) * self.efficiency(theta, y, beta)
                                  + self.gate_factor(y) * d_eff)

    def wb_dbeta(self, theta, y, beta):
        theta = np.asarray(theta, dtype=float)
        cube = (theta / THETA_BEP) ** 3
        g = self.gate_factor(y)
        d_eff = -2.0 * self.eff_beta * (np.asarray(beta, dtype=float) - self.cam(y))
        return 0.5 * cube * g * (self.blade_factor_dbeta(beta) * self.efficiency(theta, y, beta)
                                 + self.blade_factor(beta) * d_eff)

    def kernel_params(self) -> np.ndarray:
        """Parameter vector consumed by the compiled simulation kernels."""
        b1, b2, b3 = self.gate_poly
        if self.is_kaplan:
            k1, k2, k3 = self.blade_poly
            bb = self.beta_bep
        else:
            k1 = k2 = k3 = 0.0
            bb = 0.0
        return np.array([self.y_bep, b1, b2, b3, self.theta_floor,
                         self.eff_theta, self.eff_y,
                         bb, k1, k2, k3, self.eff_beta, self.cam_slope],
                        dtype=np.float64)


# ---------------------------------------------------------------------------
# Curve sets
# ---------------------------------------------------------------------------

def _check_grid(name: str, grid: np.ndarray) -> np.ndarray:
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size < 2:
        raise ConfigError(f"{name} grid must be one-dimensional with at least 2 points")
    if not np.all(np.diff(grid) > 0.0):
        raise ConfigError(f"{name} grid must be strictly increasing")
    return grid


@dataclass(frozen=True)
class CharacteristicCurveSet:
    """Tabulated (optionally closed-form backed) characteristic curves.

    ``WH`` and ``WB`` hold the surface values on the Cartesian grid
    ``theta_grid x y_grid`` (Francis) or ``theta_grid x y_grid x beta_grid``
    (Kaplan).  The grid also defines the valid evaluation domain.  When
    ``analytic`` is present the set was produced by the synthetic
    generator and evaluation uses the closed form; otherwise multilinear
    interpolation of the stored arrays is used.
    """

    kind: str
    theta_grid: np.ndarray
    y_grid: np.ndarray
    beta_grid: np.ndarray | None
    WH: np.ndarray
    WB: np.ndarray
    rated: RatedValues
    analytic: SyntheticSurface | None = None

    def __post_init__(self):
        if self.kind not in (FRANCIS, KAPLAN):
            raise ConfigError(f"unknown turbine kind {self.kind!r}")
        object.__setattr__(self, "theta_grid", _check_grid("theta", self.theta_grid))
        object.__setattr__(self, "y_grid", _check_grid("y", self.y_grid))
        if self.kind == KAPLAN:
            if self.beta_grid is None:
                raise ConfigError("Kaplan curve sets need a beta grid")
            object.__setattr__(self, "beta_grid", _check_grid("beta", self.beta_grid))
            shape = (self.theta_grid.size, self.y_grid.size, self.beta_grid.size)
        else:
            if self.beta_grid is not None:
                raise ConfigError("Francis curve sets must not carry a beta grid")
            shape = (self.theta_grid.size, self.y_grid.size)
        wh = np.asarray(self.WH, dtype=np.float64)
        wb = np.asarray(self.WB, dtype=np.float64)
        if wh.shape != shape or wb.shape != shape:
            raise ConfigError(
                f"surface arrays must have shape {shape}, got WH {wh.shape}, WB {wb.shape}")
        if not np.all(wh > 0.0):
            raise ConfigError("head surface WH must be positive over the stored grid")
        object.__setattr__(self, "WH", wh)
        object.__setattr__(self, "WB", wb)
        for arr in (self.theta_grid, self.y_grid, self.beta_grid, self.WH, self.WB):
            if arr is not None:
                arr.setflags(write=False)

    @property
    def is_kaplan(self) -> bool:
        return self.kind == KAPLAN

    def without_analytic(self) -> "CharacteristicCurveSet":
        """Copy of this set restricted to the table + interpolation path."""
        return replace(self, analytic=None)

    def _check_beta_arg(self, beta):
        if self.is_kaplan and beta is None:
            raise CurveDomainError("Kaplan curves need a blade pitch beta")
        if not self.is_kaplan and beta is not None:
            raise CurveDomainError("Francis curves take no blade pitch")

    def _check_domain(self, theta, y, beta):
        for name, grid, v in (("theta", self.theta_grid, theta),
                              ("y", self.y_grid, y),
                              ("beta", self.beta_grid, beta)):
            if grid is None:
                continue
            v = np.atleast_1d(np.asarray(v, dtype=float))
            outside = (v < grid[0]) | (v > grid[-1])
            if np.any(outside):
                bad = float(v[np.argmax(outside)])
                raise CurveDomainError(
                    f"{name}={bad:.6g} outside curve grid [{grid[0]:.6g}, {grid[-1]:.6g}]"
                    " (no extrapolation)")


def _cell(grid: np.ndarray, v):
    """Cell index and local coordinate of v; exact 0/1 weights at nodes."""
    i = np.clip(np.searchsorted(grid, v) - 1, 0, grid.size - 2)
    t = (np.asarray(v, dtype=float) - grid[i]) / (grid[i + 1] - grid[i])
    return i, t


def _interp2(tg, yg, table, theta, y):
    i, tt = _cell(tg, theta)
    j, ty = _cell(yg, y)
    w00 = table[i, j]
    w01 = table[i, j + 1]
    w10 = table[i + 1, j]
    w11 = table[i + 1, j + 1]
    lo = (1.0 - ty) * w00 + ty * w01
    hi = (1.0 - ty) * w10 + ty * w11
    return (1.0 - tt) * lo + tt * hi


def _interp3(tg, yg, bg, table, theta, y, beta):
    i, tt = _cell(tg, theta)
    j, ty = _cell(yg, y)
    k, tb = _cell(bg, beta)
    out = 0.0
    for di, wt in ((0, 1.0 - tt), (1, tt)):
        for dj, wy in ((0, 1.0 - ty), (1, ty)):
            lo = table[i + di, j + dj, k]
            hi = table[i + di, j + dj, k + 1]
            out = out + wt * wy * ((1.0 - tb) * lo + tb * hi)
    return out


def _eval_surface(curves: CharacteristicCurveSet, which: str, theta, y, beta):
    curves._check_beta_arg(beta)
    curves._check_domain(theta, y, beta)
    if curves.analytic is not None:
        fn = curves.analytic.wh if which == "WH" else curves.analytic.wb
        out = fn(theta, y, beta) if curves.is_kaplan else fn(theta, y)
    else:
        table = curves.WH if which == "WH" else curves.WB
        if curves.is_kaplan:
            out = _interp3(curves.theta_grid, curves.y_grid, curves.beta_grid,
                           table, theta, y, beta)
        else:
            out = _interp2(curves.theta_grid, curves.y_grid, table, theta, y)
    if np.ndim(out) == 0:
        return float(out)
    return out


def eval_WH(curves: CharacteristicCurveSet, theta, y, beta=None):
    """Head surface at (theta, y[, beta]); scalar or elementwise on arrays."""
    return _eval_surface(curves, "WH", theta, y, beta)


def eval_WB(curves: CharacteristicCurveSet, theta, y, beta=None):
    """Torque surface at (theta, y[, beta])."""
    return _eval_surface(curves, "WB", theta, y, beta)


def turbine_head(curves: CharacteristicCurveSet, Q_t, N, y, beta=None):
    """Turbine head (m) at discharge Q_t (m^3/s), speed N (rpm), opening y.

    Inverts the head-surface definition:
    H_t = H_bep * WH(theta, y[, beta]) * ((Q_t/Q_bep)^2 + (N/N_bep)^2).
    """
    r = curves.rated
    q = np.asarray(Q_t, dtype=float) / r.Q_bep
    nn = np.asarray(N, dtype=float) / r.N_bep
    if np.any((q == 0.0) & (nn == 0.0)):
        raise DegenerateOriginError("turbine head undefined at Q = 0, N = 0")
    theta = np.arctan2(q, nn)
    out = r.H_bep * _eval_surface(curves, "WH", theta, y, beta) * (q * q + nn * nn)
    return float(out) if np.ndim(out) == 0 else out


def turbine_torque(curves: CharacteristicCurveSet, Q_t, N, y, beta=None):
    """Turbine torque (N*m); same inversion as turbine_head on WB with T_n."""
    r = curves.rated
    q = np.asarray(Q_t, dtype=float) / r.Q_bep
    nn = np.asarray(N, dtype=float) / r.N_bep
    if np.any((q == 0.0) & (nn == 0.0)):
        raise DegenerateOriginError("turbine torque undefined at Q = 0, N = 0")
    theta = np.arctan2(q, nn)
    out = r.T_n * _eval_surface(curves, "WB", theta, y, beta) * (q * q + nn * nn)
    return float(out) if np.ndim(out) == 0 else out


def analytic_turbine_partials(curves: CharacteristicCurveSet, Q_t: float, N: float,
                              y: float, beta: float | None = None) -> dict[str, float]:
    """Closed-form partials of H_t and T_t at one operating condition.

    Only available for synthetic-backed sets; serves as the independent
    ground truth for the numerical differentiation used by the
    linearization.  Keys: dH_dQ, dH_dN, dH_dy, dT_dQ, dT_dN, dT_dy and,
    for Kaplan sets, dH_dbeta / dT_dbeta.
    """
    surf = curves.analytic
    if surf is None:
        raise ConfigError("analytic partials need a synthetic-backed curve set")
    r = curves.rated
    q = Q_t / r.Q_bep
    nn = N / r.N_bep
    theta = polar_angle(q, nn)
    rho2 = q * q + nn * nn
    args = (theta, y, beta) if surf.is_kaplan else (theta, y)
    wh = float(surf.wh(*args))
    wb = float(surf.wb(*args))
    wh_t = float(surf.wh_dtheta(*args))
    wb_t = float(surf.wb_dtheta(*args))
    out = {
        "dH_dQ": r.H_bep / r.Q_bep * (wh_t * nn + 2.0 * q * wh),
        "dH_dN": r.H_bep / r.N_bep * (-wh_t * q + 2.0 * nn * wh),
        "dH_dy": r.H_bep * rho2 * float(surf.wh_dy(*args)),
        "dT_dQ": r.T_n / r.Q_bep * (wb_t * nn + 2.0 * q * wb),
        "dT_dN": r.T_n / r.N_bep * (-wb_t * q + 2.0 * nn * wb),
        "dT_dy": r.T_n * rho2 * float(surf.wb_dy(*args)),
    }
    if surf.is_kaplan:
        out["dH_dbeta"] = r.H_bep * rho2 * float(surf.wh_dbeta(theta, y, beta))
        out["dT_dbeta"] = r.T_n * rho2 * float(surf.wb_dbeta(theta, y, beta))
    return out


# ---------------------------------------------------------------------------
# On-cam coordination of double-regulated machines
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OnCamTable:
    """Efficiency-optimal blade pitch as a function of the guide vane."""

    y_points: np.ndarray
    beta_points: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y_points, dtype=np.float64)
        b = np.asarray(self.beta_points, dtype=np.float64)
        if y.ndim != 1 or y.size < 2 or b.shape != y.shape:
            raise ConfigError("on-cam table needs matching 1-D arrays of length >= 2")
        if not np.all(np.diff(y) > 0.0):
            raise ConfigError("on-cam y knots must be strictly increasing")
        object.__setattr__(self, "y_points", y)
        object.__setattr__(self, "beta_points", b)
        y.setflags(write=False)
        b.setflags(write=False)


def on_cam(table: OnCamTable, y):
    """Piecewise-linear on-cam pitch at opening y (no extrapolation)."""
    yv = np.asarray(y, dtype=float)
    lo, hi = table.y_points[0], table.y_points[-1]
    if np.any(yv < lo) or np.any(yv > hi):
        raise CurveDomainError(f"y={yv} outside on-cam table range [{lo}, {hi}]")
    out = np.interp(yv, table.y_points, table.beta_points)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Builders and CSV interchange
# ---------------------------------------------------------------------------

def centered_grid(center: float, step: float, below: int, above: int) -> np.ndarray:
    """Uniform grid center + step*k for k in [-below, above]; hits center exactly."""
    if step <= 0.0 or below < 0 or above < 0 or below + above < 1:
        raise ConfigError("grid needs step > 0 and at least two points")
    return center + step * np.arange(-below, above + 1, dtype=np.float64)


def synthetic_curve_set(surface: SyntheticSurface, rated: RatedValues,
                        theta_grid, y_grid, beta_grid=None) -> CharacteristicCurveSet:
    """Tabulate a synthetic surface onto a grid, keeping the closed form."""
    tg = _check_grid("theta", np.asarray(theta_grid, dtype=np.float64))
    yg = _check_grid("y", np.asarray(y_grid, dtype=np.float64))
    if surface.is_kaplan:
        if beta_grid is None:
            raise ConfigError("Kaplan synthetic sets need a beta grid")
        bg = _check_grid("beta", np.asarray(beta_grid, dtype=np.float64))
        T, Y, B = np.meshgrid(tg, yg, bg, indexing="ij")
        wh = surface.wh(T, Y, B)
        wb = surface.wb(T, Y, B)
        return CharacteristicCurveSet(kind=KAPLAN, theta_grid=tg, y_grid=yg,
                                      beta_grid=bg, WH=wh, WB=wb, rated=rated,
                                      analytic=surface)
    T, Y = np.meshgrid(tg, yg, indexing="ij")
    wh = surface.wh(T, Y)
    wb = surface.wb(T, Y)
    return CharacteristicCurveSet(kind=FRANCIS, theta_grid=tg, y_grid=yg,
                                  beta_grid=None, WH=wh, WB=wb, rated=rated,
                                  analytic=surface)


def save_curves_csv(curves: CharacteristicCurveSet, path) -> None:
    """Write the tabulated surfaces, one grid node per row, theta outermost."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if curves.is_kaplan:
            w.writerow(["theta", "y", "beta", "WH", "WB"])
            for i, th in enumerate(curves.theta_grid):
                for j, y in enumerate(curves.y_grid):
                    for k, b in enumerate(curves.beta_grid):
                        w.writerow([repr(float(th)), repr(float(y)), repr(float(b)),
                                    repr(float(curves.WH[i, j, k])),
                                    repr(float(curves.WB[i, j, k]))])
        else:
            w.writerow(["theta", "y", "WH", "WB"])
            for i, th in enumerate(curves.theta_grid):
                for j, y in enumerate(curves.y_grid):
                    w.writerow([repr(float(th)), repr(float(y)),
                                repr(float(curves.WH[i, j])),
                                repr(float(curves.WB[i, j]))])


def load_curves_csv(path, kind: str, rated: RatedValues) -> CharacteristicCurveSet:
    """Load tabulated curves, validating the rectangular row-major layout."""
    kind = kind.lower()
    if kind not in (FRANCIS, KAPLAN):
        raise ConfigError(f"unknown turbine kind {kind!r}")
    expected = ["theta", "y", "beta", "WH", "WB"] if kind == KAPLAN \
        else ["theta", "y", "WH", "WB"]
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"{path}: empty curve file") from None
        if [h.strip() for h in header] != expected:
            raise ConfigError(
                f"{path}: header must be {','.join(expected)}, got {','.join(header)}")
        for ln, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected):
                raise ConfigError(f"{path}:{ln}: expected {len(expected)} fields, "
                                  f"got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise ConfigError(f"{path}:{ln}: {exc}") from None
    if not rows:
        raise ConfigError(f"{path}: no data rows")
    data = np.asarray(rows, dtype=np.float64)
    tg = np.unique(data[:, 0])
    yg = np.unique(data[:, 1])
    if kind == KAPLAN:
        bg = np.unique(data[:, 2])
        shape = (tg.size, yg.size, bg.size)
        if data.shape[0] != shape[0] * shape[1] * shape[2]:
            raise ConfigError(
                f"{path}: non-rectangular grid: {data.shape[0]} rows != "
                f"{shape[0]}x{shape[1]}x{shape[2]} grid nodes")
        T, Y, B = np.meshgrid(tg, yg, bg, indexing="ij")
        coords = np.column_stack([T.ravel(), Y.ravel(), B.ravel()])
        if not np.array_equal(coords, data[:, :3]):
            raise ConfigError(f"{path}: rows are not in row-major grid order "
                              "(theta outermost, beta innermost)")
        wh = data[:, 3].reshape(shape)
        wb = data[:, 4].reshape(shape)
        return CharacteristicCurveSet(kind=KAPLAN, theta_grid=tg, y_grid=yg,
                                      beta_grid=bg, WH=wh, WB=wb, rated=rated)
    shape = (tg.size, yg.size)
    if data.shape[0] != shape[0] * shape[1]:
        raise ConfigError(f"{path}: non-rectangular grid: {data.shape[0]} rows != "
                          f"{shape[0]}x{shape[1]} grid nodes")
    T, Y = np.meshgrid(tg, yg, indexing="ij")
    coords = np.column_stack([T.ravel(), Y.ravel()])
    if not np.array_equal(coords, data[:, :2]):
        raise ConfigError(f"{path}: rows are not in row-major grid order "
                          "(theta outermost)")
    wh = data[:, 2].reshape(shape)
    wb = data[:, 3].reshape(shape)
    return CharacteristicCurveSet(kind=FRANCIS, theta_grid=tg, y_grid=yg,
                                  beta_grid=None, WH=wh, WB=wb, rated=rated)
