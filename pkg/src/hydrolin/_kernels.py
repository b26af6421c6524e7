"""Compiled inner loops for time-domain integration.

The public simulation API packs plant and curve data into plain arrays
and dispatches here for step-input runs; a pure-python fallback in `sim`
handles arbitrary schedules.  Surface evaluation modes:

    0  closed-form Francis        1  closed-form Kaplan
    2  tabulated Francis          3  tabulated Kaplan

Parameter packs (float64 arrays):
    pp = [L, C, r_fric, H_r, H_d, J]
    rr = [Q_bep, N_bep, H_bep, T_n]
    cp = closed-form surface parameters (SyntheticSurface.kernel_params)
"""

import math

import numpy as np
from numba import njit

_THETA_BEP = math.pi / 4.0
_RPM_PER_RAD = 30.0 / math.pi


@njit(cache=True)
def _cell(grid, v):
    n = grid.shape[0]
    i = np.searchsorted(grid, v) - 1
    if i < 0:
        i = 0
    if i > n - 2:
        i = n - 2
    t = (v - grid[i]) / (grid[i + 1] - grid[i])
    return i, t


@njit(cache=True)
def _surfaces(mode, cp, tg, yg, bg, WH2, WB2, WH3, WB3, theta, y, beta):
    """Head and torque surface values; ok=False outside the grid domain."""
    if theta < tg[0] or theta > tg[-1] or y < yg[0] or y > yg[-1]:
        return 0.0, 0.0, False
    kaplan = mode == 1 or mode == 3
    if kaplan and (beta < bg[0] or beta > bg[-1]):
        return 0.0, 0.0, False
    if mode <= 1:
        y_bep = cp[0]
        d = y_bep - y
        g = 1.0 + cp[1] * d + cp[2] * d * d + cp[3] * d * d * d
        cw = cp[4]
        eff = 1.0 - cp[5] * (theta - _THETA_BEP) ** 2 - cp[6] * (y - y_bep) ** 2
        kb = 1.0
        if mode == 1:
            db = cp[7] - beta
            kb = 1.0 + cp[8] * db + cp[9] * db * db + cp[10] * db * db * db
            cam = cp[7] + cp[12] * (y - y_bep)
            eff -= cp[11] * (beta - cam) ** 2
        shape = (theta * theta + cw) / (_THETA_BEP * _THETA_BEP + cw)
        wh = 0.5 * shape * g * kb
        rat = theta / _THETA_BEP
        wb = 0.5 * rat * rat * rat * g * kb * eff
        return wh, wb, True
    i, tt = _cell(tg, theta)
    j, ty = _cell(yg, y)
    if mode == 2:
        lo_h = (1.0 - ty) * WH2[i, j] + ty * WH2[i, j + 1]
        hi_h = (1.0 - ty) * WH2[i + 1, j] + ty * WH2[i + 1, j + 1]
        lo_b = (1.0 - ty) * WB2[i, j] + ty * WB2[i, j + 1]
        hi_b = (1.0 - ty) * WB2[i + 1, j] + ty * WB2[i + 1, j + 1]
        return (1.0 - tt) * lo_h + tt * hi_h, (1.0 - tt) * lo_b + tt * hi_b, True
    k, tb = _cell(bg, beta)
    wh = 0.0
    wb = 0.0
    for di in range(2):
        wt = tt if di == 1 else 1.0 - tt
        for dj in range(2):
            wy = ty if dj == 1 else 1.0 - ty
            w = wt * wy
            wh += w * ((1.0 - tb) * WH3[i + di, j + dj, k]
                       + tb * WH3[i + di, j + dj, k + 1])
            wb += w * ((1.0 - tb) * WB3[i + di, j + dj, k]
                       + tb * WB3[i + di, j + dj, k + 1])
    return wh, wb, True


@njit(cache=True)
def _turbine(mode, cp, tg, yg, bg, WH2, WB2, WH3, WB3, rr, Q, N, y, beta):
    q = Q / rr[0]
    nn = N / rr[1]
    if q == 0.0 and nn == 0.0:
        return 0.0, 0.0, False
    theta = math.atan2(q, nn)
    wh, wb, ok = _surfaces(mode, cp, tg, yg, bg, WH2, WB2, WH3, WB3, theta, y, beta)
    if not ok:
        return 0.0, 0.0, False
    rho2 = q * q + nn * nn
    return rr[2] * wh * rho2, rr[3] * wb * rho2, True


@njit(cache=True)
def _rhs(out, x, y, beta, T_el, n, pp, mode, cp, tg, yg, bg, WH2, WB2, WH3, WB3, rr):
    L = pp[0]
    C = pp[1]
    r = pp[2]
    N = x[2 * n + 1] * _RPM_PER_RAD
    H_t, T_t, ok = _turbine(mode, cp, tg, yg, bg, WH2, WB2, WH3, WB3, rr,
                            x[n], N, y, beta)
    if not ok:
        return False
    inv_l = 1.0 / L
    out[0] = 2.0 * inv_l * (pp[3] - x[n + 1]) - r * abs(x[0]) * x[0] * inv_l
    for i in range(1, n):
        out[i] = inv_l * (x[n + i] - x[n + 1 + i]) - r * abs(x[i]) * x[i] * inv_l
    out[n] = 2.0 * inv_l * (x[2 * n] - (H_t + pp[4])) - r * abs(x[n]) * x[n] * inv_l
    inv_c = 1.0 / C
    for j in range(n):
        out[n + 1 + j] = inv_c * (x[j] - x[j + 1])
    out[2 * n + 1] = (T_t - T_el) / pp[5]
    return True


@njit(cache=True)
def rk4_nonlinear(x_init, dt, n_steps, rec, k_step, y0, y1, b0, b1, T_el, n,
                  pp, mode, cp, tg, yg, bg, WH2, WB2, WH3, WB3, rr):
    """Fixed-step RK4 of the nonlinear plant under a step input.

    Inputs are held constant over each step; the switch from (y0, b0) to
    (y1, b1) happens at step index k_step.  Records every `rec` steps.
    Returns (states, H_t, T_t, head_avg, err_step, x_at_fail); err_step is
    -1 on success, otherwise the step index whose evaluation left the
    curve domain.
    """
    dim = 2 * n + 2
    n_rec = n_steps // rec + 1
    xs = np.empty((n_rec, dim))
    hs = np.empty(n_rec)
    ts = np.empty(n_rec)
    ha = np.empty(n_rec)
    x = x_init.copy()
    k1 = np.empty(dim)
    k2 = np.empty(dim)
    k3 = np.empty(dim)
    k4 = np.empty(dim)
    xt = np.empty(dim)
    m = 0
    for k in range(n_steps + 1):
        y = y1 if k >= k_step else y0
        b = b1 if k >= k_step else b0
        if k % rec == 0:
            H_t, T_t, ok = _turbine(mode, cp, tg, yg, bg, WH2, WB2, WH3, WB3, rr,
                                    x[n], x[2 * n + 1] * _RPM_PER_RAD, y, b)
            if not ok:
                return xs, hs, ts, ha, k, x
            xs[m, :] = x
            hs[m] = H_t
            ts[m] = T_t
            s = 0.0
            for j in range(n):
                s += x[n + 1 + j]
            ha[m] = s / n
            m += 1
        if k == n_steps:
            break
        if not _rhs(k1, x, y, b, T_el, n, pp, mode, cp, tg, yg, bg,
                    WH2, WB2, WH3, WB3, rr):
            return xs, hs, ts, ha, k, x
        for i in range(dim):
            xt[i] = x[i] + 0.5 * dt * k1[i]
        if not _rhs(k2, xt, y, b, T_el, n, pp, mode, cp, tg, yg, bg,
                    WH2, WB2, WH3, WB3, rr):
            return xs, hs, ts, ha, k, x
        for i in range(dim):
            xt[i] = x[i] + 0.5 * dt * k2[i]
        if not _rhs(k3, xt, y, b, T_el, n, pp, mode, cp, tg, yg, bg,
                    WH2, WB2, WH3, WB3, rr):
            return xs, hs, ts, ha, k, x
        for i in range(dim):
            xt[i] = x[i] + dt * k3[i]
        if not _rhs(k4, xt, y, b, T_el, n, pp, mode, cp, tg, yg, bg,
                    WH2, WB2, WH3, WB3, rr):
            return xs, hs, ts, ha, k, x
        for i in range(dim):
            x[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i])
    return xs, hs, ts, ha, -1, x


@njit(cache=True)
def rk4_linear(Phi, G0, G1, k_step, x_init, n_steps, rec):
    """Exact-RK4 LTI propagation x+ = Phi x + G for piecewise-constant input.

    Phi and G come from the RK4 polynomial of the step map, so recorded
    samples coincide with literal four-stage stepping.
    """
    dim = x_init.shape[0]
    n_rec = n_steps // rec + 1
    xs = np.empty((n_rec, dim))
    xa = x_init.copy()
    xb = np.empty(dim)
    m = 0
    for k in range(n_steps + 1):
        if k % rec == 0:
            xs[m, :] = xa
            m += 1
        if k == n_steps:
            break
        g = G1 if k >= k_step else G0
        for i in range(dim):
            s = g[i]
            for j in range(dim):
                s += Phi[i, j] * xa[j]
            xb[i] = s
        tmp = xa
        xa = xb
        xb = tmp
    return xs
