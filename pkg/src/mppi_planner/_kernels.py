"""Jitted hot path: rollout dynamics, waypoint lookup, and cost accumulation.

One kernel simulates a block of rollouts and accumulates their cost-to-go in a
single pass. Results are identical for any block schedule because every
rollout is computed independently in fixed step order; the nearest-waypoint
scan reproduces a full argmin with the lowest-index tie rule via the
cell-candidate table (sorted by index, strict-less minimum).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi


@njit(cache=True, nogil=True)
def rollout_block(
    nominal,  # (T, 2) [a, omega]
    eps,  # (m, T, 2) box-clamped perturbations
    x0, y0, th0, v0, de0,  # initial state
    dt, wheelbase, delta_max, a_min, v_goal,
    wx, wy, wyaw, wspeed,  # (N,) waypoint columns
    gx0, gy0, cell, nx, ny,  # candidate-grid geometry
    table,  # (n_cells, C) int32 candidate indices, sorted ascending
    n_cand,  # (n_cells,) int32
    centers,  # (T, K, 2) obstacle circle centers per step
    radii,  # (K,)
    gate,  # bool: safe-distance cost fires only on penetration
    d_safe_c, d_safe_0,
    w_dist, w_target, w_yaw, w_speed, w_safe, w_terminal,
    tx, ty,  # target point
    X, Y, TH, V, DE,  # (m, T+1) state outputs
    costs,  # (m,) output
):
    m = eps.shape[0]
    T = nominal.shape[0]
    n_wp = wx.shape[0]
    K = radii.shape[0]
    for i in range(m):
        x = x0
        y = y0
        th = th0
        v = v0
        de = de0
        X[i, 0] = x
        Y[i, 0] = y
        TH[i, 0] = th
        V[i, 0] = v
        DE[i, 0] = de
        d2_target_prev = (x - tx) * (x - tx) + (y - ty) * (y - ty)
        s = 0.0
        for t in range(T):
            a = nominal[t, 0] + eps[i, t, 0]
            om = nominal[t, 1] + eps[i, t, 1]
            # executed acceleration lands exactly on v_goal when it would
            # overshoot (floored at a_min); the perturbation itself is not
            # rewritten
            cap = (v_goal - v) / dt
            if a > cap:
                a = cap
            if a < a_min:
                a = a_min
            vdt = v * dt
            x = x + vdt * math.cos(th)
            y = y + vdt * math.sin(th)
            th = th + vdt * math.tan(de) / wheelbase
            if th > math.pi or th < -math.pi:
                th = (th + math.pi) % TWO_PI - math.pi
            v = v + a * dt
            if v < 0.0:
                v = 0.0
            de = de + om * dt
            if de > delta_max:
                de = delta_max
            elif de < -delta_max:
                de = -delta_max
            X[i, t + 1] = x
            Y[i, t + 1] = y
            TH[i, t + 1] = th
            V[i, t + 1] = v
            DE[i, t + 1] = de

            # nearest waypoint: candidate cells inside the grid, full scan outside
            best = np.inf
            ref = 0
            cx = int(math.floor((x - gx0) / cell))
            cy = int(math.floor((y - gy0) / cell))
            if 0 <= cx < nx and 0 <= cy < ny:
                flat = cx * ny + cy
                for j in range(n_cand[flat]):
                    w = table[flat, j]
                    dxw = wx[w] - x
                    dyw = wy[w] - y
                    d2 = dxw * dxw + dyw * dyw
                    if d2 < best:
                        best = d2
                        ref = w
            else:
                for w in range(n_wp):
                    dxw = wx[w] - x
                    dyw = wy[w] - y
                    d2 = dxw * dxw + dyw * dyw
                    if d2 < best:
                        best = d2
                        ref = w

            yaw_err = th - wyaw[ref]
            if yaw_err > math.pi or yaw_err < -math.pi:
                yaw_err = (yaw_err + math.pi) % TWO_PI - math.pi
            v_err = v - wspeed[ref]

            q = w_dist * best + w_yaw * yaw_err * yaw_err + w_speed * v_err * v_err

            d2_target = (x - tx) * (x - tx) + (y - ty) * (y - ty)
            if d2_target > d2_target_prev:
                q += w_target
            d2_target_prev = d2_target

            if K > 0:
                d_obj = np.inf
                for k in range(K):
                    dxo = x - centers[t, k, 0]
                    dyo = y - centers[t, k, 1]
                    d = math.sqrt(dxo * dxo + dyo * dyo) - radii[k]
                    if d < d_obj:
                        d_obj = d
                if (not gate) or d_obj <= 0.0:
                    short = (d_safe_c * v + d_safe_0) - d_obj
                    if short > 0.0:
                        q += w_safe * short * short
            s += q
        if w_terminal != 0.0:
            s += w_terminal * d2_target_prev
        costs[i] = s
