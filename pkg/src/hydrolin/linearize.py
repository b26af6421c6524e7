"""LTI plant models by numerical first-order expansion of the turbine.

Two approximations turn the nonlinear plant into a linear time-invariant
system around an operating point:

* the hydroacoustic resistance is frozen at its operating-point value
  (R depends on |Q|, which varies little for small excursions), and
* the turbine head and torque surfaces, which exist only as data, are
  expanded to first order with central finite differences.

The expansion coefficients fold into the state matrix through a selector
M with M x = [Q_t, N]^T (the rpm conversion lives in the N column, so
all derivative bookkeeping stays in curve-native units), and the
left-over constants collect into known terms c_H and c_T that ride along
in the input vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import circuit
from .circuit import RPM_PER_RAD, PlantConfig
from .curves import CharacteristicCurveSet, turbine_head, turbine_torque
from .exceptions import CurveDomainError, EquilibriumError

#: default relative / absolute probe sizes (see DiffSteps.for_plant)
EPS_REL = 1.0e-3


@dataclass(frozen=True)
class DiffSteps:
    """Finite-difference probe sizes, one per turbine argument."""

    eps_Q: float   # m^3/s
    eps_N: float   # rpm
    eps_y: float   # pu
    eps_beta: float  # pu

    def __post_init__(self):
        for name in ("eps_Q", "eps_N", "eps_y", "eps_beta"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def for_plant(cls, cfg: PlantConfig) -> "DiffSteps":
        """Defaults: 1e-3 pu of gate/blade travel, 1e-3 of BEP flow/speed.

        Balances O(eps^2) truncation against interpolation kink noise on
        tabulated curves; override per variable through the plant config.
        """
        if cfg.diff_steps is not None:
            return cfg.diff_steps
        return cls(eps_Q=EPS_REL * cfg.rated.Q_bep, eps_N=EPS_REL * cfg.rated.N_bep,
                   eps_y=EPS_REL, eps_beta=EPS_REL)


@dataclass(frozen=True)
class OperatingPoint:
    """A steady state of the plant, the anchor of one linearization."""

    y0: float
    N0: float        # rpm
    Q_t0: float      # m^3/s
    x0: np.ndarray   # equilibrium state (2n+2,)
    H_t0: float      # m
    T_t0: float      # N*m
    beta0: float | None = None

    def __post_init__(self):
        x0 = np.asarray(self.x0, dtype=np.float64)
        object.__setattr__(self, "x0", x0)
        x0.setflags(write=False)

    @property
    def T_el0(self) -> float:
        """Electrical torque balancing the machine at this point."""
        return self.T_t0


@dataclass(frozen=True)
class DerivativeBundle:
    """Central-difference partials of H_t and T_t at an operating point."""

    dH_dQ: float
    dH_dN: float
    dH_dy: float
    dT_dQ: float
    dT_dN: float
    dT_dy: float
    steps: DiffSteps
    dH_dbeta: float | None = None
    dT_dbeta: float | None = None


def central_diff(f, x0: float, eps: float) -> float:
    """(f(x0+eps) - f(x0-eps)) / (2 eps); evaluation errors carry the probe."""
    try:
        hi = f(x0 + eps)
    except CurveDomainError as exc:
        raise CurveDomainError(f"probe at {x0 + eps} failed: {exc}") from exc
    try:
        lo = f(x0 - eps)
    except CurveDomainError as exc:
        raise CurveDomainError(f"probe at {x0 - eps} failed: {exc}") from exc
    return (hi - lo) / (2.0 * eps)


def _cell_index(grid: np.ndarray, v: float) -> int:
    return int(np.clip(np.searchsorted(grid, v) - 1, 0, grid.size - 2))


def _guarded_diff(f, x0: float, eps: float, grid_coord=None,
                  grid: np.ndarray | None = None) -> float:
    """Finite difference that avoids straddling interpolation kinks.

    For tabulated surfaces `grid_coord` maps the probed variable to the
    grid coordinate it sweeps (identity for y/beta, the polar angle for
    Q/N) and `grid` is that axis.  When the two central probes would land
    in different grid cells, the estimate is taken one-sided inside the
    cell containing the operating point, where the surface is smooth.
    On a domain error the probe shrinks once by 10x before giving up.
    """
    for attempt_eps in (eps, 0.1 * eps):
        try:
            if grid is None or grid_coord is None:
                return central_diff(f, x0, attempt_eps)
            c0 = _cell_index(grid, grid_coord(x0))
            cm = _cell_index(grid, grid_coord(x0 - attempt_eps))
            cp = _cell_index(grid, grid_coord(x0 + attempt_eps))
            if cm == cp:
                return central_diff(f, x0, attempt_eps)
            if c0 == cp:
                return (f(x0 + attempt_eps) - f(x0)) / attempt_eps
            if c0 == cm:
                return (f(x0) - f(x0 - attempt_eps)) / attempt_eps
            return central_diff(f, x0, attempt_eps)
        except CurveDomainError:
            if attempt_eps != eps:
                raise
    raise AssertionError("unreachable")


def derivative_bundle(curves: CharacteristicCurveSet, op: OperatingPoint,
                      steps: DiffSteps) -> DerivativeBundle:
    """All turbine partials at `op`, each argument varied in isolation."""
    r = curves.rated
    beta = op.beta0
    tabulated = curves.analytic is None

    def head(Q=None, N=None, y=None, b=None):
        return turbine_head(curves,
                            op.Q_t0 if Q is None else Q,
                            op.N0 if N is None else N,
                            op.y0 if y is None else y,
                            beta if b is None else b)

    def torque(Q=None, N=None, y=None, b=None):
        return turbine_torque(curves,
                              op.Q_t0 if Q is None else Q,
                              op.N0 if N is None else N,
                              op.y0 if y is None else y,
                              beta if b is None else b)

    theta_of_Q = (lambda Q: np.arctan2(Q / r.Q_bep, op.N0 / r.N_bep)) if tabulated else None
    theta_of_N = (lambda N: np.arctan2(op.Q_t0 / r.Q_bep, N / r.N_bep)) if tabulated else None
    ident = (lambda v: v) if tabulated else None
    tg = curves.theta_grid if tabulated else None
    yg = curves.y_grid if tabulated else None

    out = dict(
        dH_dQ=_guarded_diff(lambda v: head(Q=v), op.Q_t0, steps.eps_Q, theta_of_Q, tg),
        dH_dN=_guarded_diff(lambda v: head(N=v), op.N0, steps.eps_N, theta_of_N, tg),
        dH_dy=_guarded_diff(lambda v: head(y=v), op.y0, steps.eps_y, ident, yg),
        dT_dQ=_guarded_diff(lambda v: torque(Q=v), op.Q_t0, steps.eps_Q, theta_of_Q, tg),
        dT_dN=_guarded_diff(lambda v: torque(N=v), op.N0, steps.eps_N, theta_of_N, tg),
        dT_dy=_guarded_diff(lambda v: torque(y=v), op.y0, steps.eps_y, ident, yg),
    )
    if curves.is_kaplan:
        bg = curves.beta_grid if tabulated else None
        out["dH_dbeta"] = _guarded_diff(lambda v: head(b=v), beta, steps.eps_beta,
                                        ident, bg)
        out["dT_dbeta"] = _guarded_diff(lambda v: torque(b=v), beta, steps.eps_beta,
                                        ident, bg)
    return DerivativeBundle(steps=steps, **out)


@dataclass(frozen=True)
class LinearStateSpace:
    """LTI plant model x' = A x + B u around one operating point.

    Input layouts:
        Francis: u = [H_r, y, c_H + H_d, c_T - T_el]
        Kaplan:  u = [H_r, y, beta, c_H + H_d, c_T - T_el]
    where for Kaplan machines c_H and c_T already absorb the pitch
    linearization point (c - d_beta * beta0).
    """

    A: np.ndarray
    B: np.ndarray
    input_labels: tuple[str, ...]
    c_H: float
    c_T: float
    op: OperatingPoint
    derivs: DerivativeBundle
    kind: str
    H_r: float
    H_d: float
    n_elements: int

    def __post_init__(self):
        for name in ("A", "B"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            object.__setattr__(self, name, arr)
            arr.setflags(write=False)

    @property
    def is_kaplan(self) -> bool:
        return self.kind == "kaplan"

    @property
    def layout(self) -> circuit.StateLayout:
        return circuit.StateLayout(self.n_elements)

    def input_vector(self, y: float, T_el: float,
                     beta: float | None = None) -> np.ndarray:
        """Numeric input vector for a given gate, pitch and load torque."""
        if self.is_kaplan:
            if beta is None:
                raise ValueError("Kaplan linear model needs beta")
            return np.array([self.H_r, y, beta, self.c_H + self.H_d,
                             self.c_T - T_el])
        return np.array([self.H_r, y, self.c_H + self.H_d, self.c_T - T_el])

    def outputs(self, states: np.ndarray, y, beta=None):
        """First-order turbine head and torque along a state history.

        `states` is (dim,) or (m, dim); y / beta scalars or per-sample
        arrays.  Returns (H_t, T_t) with matching shape.
        """
        states = np.asarray(states, dtype=float)
        lay = self.layout
        Q_t = states[..., lay.i_turbine]
        N = states[..., lay.i_omega] * RPM_PER_RAD
        d = self.derivs
        H = self.c_H + d.dH_dQ * Q_t + d.dH_dN * N + d.dH_dy * np.asarray(y)
        T = self.c_T + d.dT_dQ * Q_t + d.dT_dN * N + d.dT_dy * np.asarray(y)
        if self.is_kaplan:
            H = H + d.dH_dbeta * np.asarray(beta)
            T = T + d.dT_dbeta * np.asarray(beta)
        return H, T

    def head_average(self, states: np.ndarray):
        """Spatially averaged penstock head along a state history."""
        states = np.asarray(states, dtype=float)
        return states[..., self.layout.heads].mean(axis=-1)


def equilibrium_residual(cfg: PlantConfig, curves: CharacteristicCurveSet,
                         op: OperatingPoint) -> float:
    """Normalized infinity-norm of the nonlinear RHS at an operating point.

    Discharge rows scale by Q_bep, head rows by H_n, the speed row by the
    BEP angular speed, giving per-unit-per-second rates.
    """
    f = circuit.nonlinear_rhs(cfg, curves, op.x0, op.y0, op.T_el0, op.beta0)
    lay = cfg.layout
    r = cfg.rated
    scale = np.empty(lay.dim)
    scale[lay.discharges] = r.Q_bep
    scale[lay.heads] = r.H_n
    scale[lay.i_omega] = r.omega_bep
    return float(np.max(np.abs(f / scale)))


#: residual (1/s, normalized) above which a point is rejected as non-equilibrium
EQUILIBRIUM_TOL = 1.0e-6


def _assemble(cfg: PlantConfig, curves: CharacteristicCurveSet,
              op: OperatingPoint, derivs: DerivativeBundle,
              kaplan: bool) -> LinearStateSpace:
    res = equilibrium_residual(cfg, curves, op)
    if res > EQUILIBRIUM_TOL:
        raise EquilibriumError(
            f"operating point is not an equilibrium (residual {res:.3e})")
    lay = cfg.layout
    A0 = circuit.assemble_A(cfg, op.x0)
    B = circuit.assemble_B(cfg)
    B1, B2, B3 = B[:, 0], B[:, 1], B[:, 2]
    M = np.zeros((2, lay.dim))
    M[0, lay.i_turbine] = 1.0
    M[1, lay.i_omega] = RPM_PER_RAD
    dH = np.array([derivs.dH_dQ, derivs.dH_dN])
    dT = np.array([derivs.dT_dQ, derivs.dT_dN])
    A_t = A0 + np.outer(B2, dH @ M) + np.outer(B3, dT @ M)
    c_H = op.H_t0 - derivs.dH_dQ * op.Q_t0 - derivs.dH_dN * op.N0 \
        - derivs.dH_dy * op.y0
    c_T = op.T_t0 - derivs.dT_dQ * op.Q_t0 - derivs.dT_dN * op.N0 \
        - derivs.dT_dy * op.y0
    y_col = B2 * derivs.dH_dy + B3 * derivs.dT_dy
    if kaplan:
        c_H -= derivs.dH_dbeta * op.beta0
        c_T -= derivs.dT_dbeta * op.beta0
        beta_col = B2 * derivs.dH_dbeta + B3 * derivs.dT_dbeta
        B_t = np.column_stack([B1, y_col, beta_col, B2, B3])
        labels = ("H_r", "y", "beta", "c_H + H_d", "c_T - T_el")
    else:
        B_t = np.column_stack([B1, y_col, B2, B3])
        labels = ("H_r", "y", "c_H + H_d", "c_T - T_el")
    return LinearStateSpace(A=A_t, B=B_t, input_labels=labels, c_H=c_H, c_T=c_T,
                            op=op, derivs=derivs, kind=cfg.kind,
                            H_r=cfg.H_r, H_d=cfg.H_d, n_elements=cfg.n_elements)


def linearize_francis(cfg: PlantConfig, curves: CharacteristicCurveSet,
                      op: OperatingPoint,
                      steps: DiffSteps | None = None) -> LinearStateSpace:
    """LTI model of a Francis plant around `op` (inputs H_r, y, known terms)."""
    if cfg.is_kaplan:
        raise EquilibriumError("linearize_francis called on a Kaplan plant")
    steps = steps or DiffSteps.for_plant(cfg)
    derivs = derivative_bundle(curves, op, steps)
    return _assemble(cfg, curves, op, derivs, kaplan=False)


def linearize_kaplan(cfg: PlantConfig, curves: CharacteristicCurveSet,
                     op: OperatingPoint,
                     steps: DiffSteps | None = None) -> LinearStateSpace:
    """LTI model of a Kaplan plant; adds the blade-pitch input column."""
    if not cfg.is_kaplan:
        raise EquilibriumError("linearize_kaplan called on a Francis plant")
    if op.beta0 is None:
        raise EquilibriumError("Kaplan operating point needs beta0")
    steps = steps or DiffSteps.for_plant(cfg)
    derivs = derivative_bundle(curves, op, steps)
    return _assemble(cfg, curves, op, derivs, kaplan=True)


def linearize(cfg: PlantConfig, curves: CharacteristicCurveSet,
              op: OperatingPoint,
              steps: DiffSteps | None = None) -> LinearStateSpace:
    """Kind-dispatching convenience wrapper."""
    if cfg.is_kaplan:
        return linearize_kaplan(cfg, curves, op, steps)
    return linearize_francis(cfg, curves, op, steps)


def linear_model_dict(lin: LinearStateSpace) -> dict:
    """JSON-serializable LTI model for downstream predictive-control use."""
    d = lin.derivs
    return {
        "kind": lin.kind,
        "n_elements": lin.n_elements,
        "state_layout": "[Q_1..Q_{n+1}, h_1..h_n, omega]",
        "input_labels": list(lin.input_labels),
        "A": lin.A.tolist(),
        "B": lin.B.tolist(),
        "c_H": lin.c_H,
        "c_T": lin.c_T,
        "H_r": lin.H_r,
        "H_d": lin.H_d,
        "operating_point": {
            "y0": lin.op.y0,
            "beta0": lin.op.beta0,
            "N0_rpm": lin.op.N0,
            "Q_t0_m3s": lin.op.Q_t0,
            "H_t0_m": lin.op.H_t0,
            "T_t0_Nm": lin.op.T_t0,
            "x0": lin.op.x0.tolist(),
        },
        "derivatives": {
            "dH_dQ": d.dH_dQ, "dH_dN": d.dH_dN, "dH_dy": d.dH_dy,
            "dT_dQ": d.dT_dQ, "dT_dN": d.dT_dN, "dT_dy": d.dT_dy,
            "dH_dbeta": d.dH_dbeta, "dT_dbeta": d.dT_dbeta,
        },
        "eps": {"Q_m3s": d.steps.eps_Q, "N_rpm": d.steps.eps_N,
                "y": d.steps.eps_y, "beta": d.steps.eps_beta},
    }


def linear_model_from_dict(doc: dict) -> LinearStateSpace:
    """Rebuild a LinearStateSpace from its serialized form."""
    opd = doc["operating_point"]
    op = OperatingPoint(y0=opd["y0"], N0=opd["N0_rpm"], Q_t0=opd["Q_t0_m3s"],
                        x0=np.asarray(opd["x0"], dtype=float),
                        H_t0=opd["H_t0_m"], T_t0=opd["T_t0_Nm"],
                        beta0=opd["beta0"])
    eps = doc["eps"]
    dd = doc["derivatives"]
    derivs = DerivativeBundle(
        dH_dQ=dd["dH_dQ"], dH_dN=dd["dH_dN"], dH_dy=dd["dH_dy"],
        dT_dQ=dd["dT_dQ"], dT_dN=dd["dT_dN"], dT_dy=dd["dT_dy"],
        dH_dbeta=dd["dH_dbeta"], dT_dbeta=dd["dT_dbeta"],
        steps=DiffSteps(eps_Q=eps["Q_m3s"], eps_N=eps["N_rpm"],
                        eps_y=eps["y"], eps_beta=eps["beta"]))
    return LinearStateSpace(A=np.asarray(doc["A"], dtype=float),
                            B=np.asarray(doc["B"], dtype=float),
                            input_labels=tuple(doc["input_labels"]),
                            c_H=doc["c_H"], c_T=doc["c_T"], op=op,
                            derivs=derivs, kind=doc["kind"],
                            H_r=doc["H_r"], H_d=doc["H_d"],
                            n_elements=doc["n_elements"])
