"""Equivalent-circuit hydraulic model of the plant.

The penstock is split into n identical elements of length dx = l/n; each
element is a T-section with half its inductance and friction on either
side of a midpoint compressibility node.  Cascading the sections merges
adjacent half-branches, which leaves n+1 discharge branches (boundary
half-branches at the reservoir and turbine ends, full merged branches in
between) and n midpoint heads.  The state vector is::

    x = [Q_1 .. Q_{n+1},  h_{3/2} .. h_{n+1/2},  omega]   (2n+2 entries)

with Q_{n+1} the turbine discharge and omega the rotor speed in rad/s
(converted to rpm only at the curve interface).  Boundary branches couple
to their midpoint head with 2/L, merged interior branches with 1/L, and
every branch carries its own friction -R(Q_i)/L on the diagonal.

The three exogenous potentials enter through the input vector::

    u = [H_r,  H_t + H_d,  T_t - T_el]

i.e. the reservoir head, the outlet potential (turbine head stacked on
the downstream head, so a lossless steady state gives H_t = H_r - H_d)
and the accelerating torque on the rotor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curves import (CharacteristicCurveSet, FRANCIS, KAPLAN, OnCamTable,
                     RatedValues, turbine_head, turbine_torque)
from .exceptions import ConfigError

#: rad/s -> rpm conversion used at the curve interface.
RPM_PER_RAD = 30.0 / math.pi


@dataclass(frozen=True)
class RlcParams:
    """Hydroacoustic parameters of one penstock element at a discharge Q.

    R: resistance (s/m^2), discharge-dependent, zero iff Q = 0
    L: inductance (s^2/m^2)
    C: capacitance (m^2 s^2 / m)
    dx: element length (m)
    """

    R: float
    L: float
    C: float
    dx: float


@dataclass(frozen=True)
class StateLayout:
    """Index bookkeeping for the 2n+2 state vector."""

    n: int

    @property
    def dim(self) -> int:
        return 2 * self.n + 2

    @property
    def discharges(self) -> slice:
        return slice(0, self.n + 1)

    @property
    def heads(self) -> slice:
        return slice(self.n + 1, 2 * self.n + 1)

    @property
    def i_turbine(self) -> int:
        """Index of the turbine discharge Q_{n+1}."""
        return self.n

    @property
    def i_omega(self) -> int:
        return 2 * self.n + 1

    def speed_rpm(self, x: np.ndarray) -> float:
        return float(x[self.i_omega]) * RPM_PER_RAD


@dataclass(frozen=True)
class PlantConfig:
    """Physical and rated description of one plant.

    Geometry and friction describe the penstock; `rated` carries the
    best-efficiency-point quantities; `curves` the machine's
    characteristic surfaces; `on_cam` the pitch coordination law
    (Kaplan only).
    """

    name: str
    kind: str
    H_r: float            # reservoir head (m)
    H_d: float            # downstream head (m)
    length: float         # penstock length (m)
    n_elements: int
    diameter: float       # pipe diameter (m)
    area: float           # pipe cross-section (m^2)
    friction: float       # Darcy-Weisbach friction coefficient
    wave_speed: float     # m/s
    inertia: float        # rotating inertia J (kg m^2)
    rated: RatedValues
    y_range: tuple[float, float]
    curves: CharacteristicCurveSet
    on_cam: OnCamTable | None = None
    gravity: float = 9.81
    diff_steps: "object | None" = None  # optional linearize.DiffSteps override

    def __post_init__(self):
        if self.kind not in (FRANCIS, KAPLAN):
            raise ConfigError(f"unknown turbine kind {self.kind!r}")
        if self.n_elements < 1:
            raise ConfigError("penstock needs n >= 1 elements")
        for name in ("H_r", "length", "diameter", "area", "wave_speed",
                     "inertia", "gravity"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"{name} must be strictly positive")
        if self.friction < 0.0:
            raise ConfigError("friction coefficient must be non-negative")
        if self.H_d < 0.0:
            raise ConfigError("downstream head must be non-negative")
        if not self.H_r - self.H_d > 0.0:
            raise ConfigError("net head H_r - H_d must be positive")
        y_min, y_max = self.y_range
        if not (0.0 <= y_min < y_max <= 1.0):
            raise ConfigError("y_range must satisfy 0 <= y_min < y_max <= 1")
        if self.kind == KAPLAN and self.on_cam is None:
            raise ConfigError("Kaplan plants need an on-cam table")
        if self.curves.kind != self.kind:
            raise ConfigError(f"curve set is {self.curves.kind}, plant is {self.kind}")

    @property
    def is_kaplan(self) -> bool:
        return self.kind == KAPLAN

    @property
    def dx(self) -> float:
        return self.length / self.n_elements

    @property
    def net_head(self) -> float:
        return self.H_r - self.H_d

    @property
    def layout(self) -> StateLayout:
        return StateLayout(self.n_elements)

    @property
    def friction_coeff(self) -> float:
        """r such that one element's resistance is R(Q) = r*|Q|."""
        return self.friction * self.dx / (2.0 * self.gravity * self.diameter
                                          * self.area * self.area)


def rlc_params(cfg: PlantConfig, Q: float) -> RlcParams:
    """Element R(Q), L, C and dx for the configured pipe."""
    dx = cfg.dx
    g_a = cfg.gravity * cfg.area
    return RlcParams(
        R=cfg.friction_coeff * abs(Q),
        L=dx / g_a,
        C=g_a * dx / (cfg.wave_speed * cfg.wave_speed),
        dx=dx,
    )


def assemble_A(cfg: PlantConfig, x: np.ndarray) -> np.ndarray:
    """State matrix A(x): friction diagonals plus the LC ladder couplings.

    The omega row is zero (the rotor is driven purely through the input
    matrix) and the boundary potentials enter through B, so A alone
    describes the closed hydraulic ladder.
    """
    n = cfg.n_elements
    lay = cfg.layout
    x = np.asarray(x, dtype=float)
    if x.shape != (lay.dim,):
        raise ConfigError(f"state must have shape ({lay.dim},), got {x.shape}")
    el = rlc_params(cfg, 0.0)
    L, C = el.L, el.C
    r = cfg.friction_coeff
    A = np.zeros((lay.dim, lay.dim))
    for i in range(n + 1):
        A[i, i] = -r * abs(x[i]) / L
    # boundary half-branches: +-2/L; merged interior branches: +-1/L
    A[0, n + 1] = -2.0 / L
    for i in range(1, n):
        A[i, n + i] = 1.0 / L
        A[i, n + 1 + i] = -1.0 / L
    A[n, 2 * n] = 2.0 / L
    for j in range(n):
        A[n + 1 + j, j] = 1.0 / C
        A[n + 1 + j, j + 1] = -1.0 / C
    return A


def assemble_B(cfg: PlantConfig) -> np.ndarray:
    """Input matrix: reservoir head, outlet potential, accelerating torque."""
    lay = cfg.layout
    el = rlc_params(cfg, 0.0)
    B = np.zeros((lay.dim, 3))
    B[0, 0] = 2.0 / el.L
    B[lay.i_turbine, 1] = -2.0 / el.L
    B[lay.i_omega, 2] = 1.0 / cfg.inertia
    return B


def input_vector(cfg: PlantConfig, curves: CharacteristicCurveSet, x: np.ndarray,
                 y: float, T_el: float, beta: float | None = None) -> np.ndarray:
    """Input vector u = [H_r, H_t + H_d, T_t - T_el] at the current state."""
    lay = cfg.layout
    Q_t = float(x[lay.i_turbine])
    N = lay.speed_rpm(x)
    H_t = turbine_head(curves, Q_t, N, y, beta)
    T_t = turbine_torque(curves, Q_t, N, y, beta)
    return np.array([cfg.H_r, H_t + cfg.H_d, T_t - T_el])


def nonlinear_rhs(cfg: PlantConfig, curves: CharacteristicCurveSet, x: np.ndarray,
                  y: float, T_el: float, beta: float | None = None) -> np.ndarray:
    """Time derivative of the full nonlinear plant state.

    Friction uses the instantaneous per-branch R(Q_i); the turbine head
    and torque are read from the characteristic curves at the current
    turbine discharge and speed (quasi-static machine model).
    """
    y_min, y_max = cfg.y_range
    if not (y_min - 1e-9 <= y <= y_max + 1e-9):
        raise ConfigError(f"guide vane y={y} outside operating range "
                          f"[{y_min}, {y_max}]")
    A = assemble_A(cfg, x)
    B = assemble_B(cfg)
    u = input_vector(cfg, curves, x, y, T_el, beta)
    return A @ np.asarray(x, dtype=float) + B @ u


def rhs_frozen_R(cfg: PlantConfig, curves: CharacteristicCurveSet,
                 x_freeze: np.ndarray):
    """RHS closure with the hydroacoustic resistance frozen at x_freeze.

    Small operating-point excursions justify treating R as constant; the
    returned callable g(x, y, T_el, beta) is then linear in the hydraulic
    state and nonlinear only through the turbine surfaces.  This is the
    function the LTI extraction approximates.
    """
    A0 = assemble_A(cfg, x_freeze)
    B = assemble_B(cfg)

    def rhs(x, y, T_el, beta=None):
        u = input_vector(cfg, curves, x, y, T_el, beta)
        return A0 @ np.asarray(x, dtype=float) + B @ u

    return rhs
