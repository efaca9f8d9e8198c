"""Scalar computational core shared by the public modules.

Every numerical formula lives here exactly once; `so3`, `dynamics`, and
`optimality` wrap these functions with validation, typed errors, and
docstrings. The functions are written in nopython-compilable style and are
jitted when numba is importable (cached to disk); without numba they run
as plain Python with identical results.

Status codes returned by the stepping routines:
    0 ok, 1 Newton no-convergence, 2 step rotation >= pi/2,
    3 singular arc (|lam_omega| under floor), 4 singular linear system.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is an optional accelerator
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap


OK = 0
NO_CONVERGENCE = 1
STEP_TOO_LARGE = 2
SINGULAR_ARC = 3
SINGULAR_SYSTEM = 4

NEWTON_TOL = 1e-14
NEWTON_MAX_ITER = 50
MAX_STEP_ANGLE = 0.5 * math.pi
SINGULAR_ARC_FLOOR = 1e-12
DET_FLOOR = 1e-14
CONDITION_CEILING = 1e14
SMALL_ANGLE = 1e-4


@njit(cache=True)
def rod_ab(theta):
    """a = sin(t)/t, b = (1-cos t)/t^2, 4th-order series below SMALL_ANGLE."""
    if theta < SMALL_ANGLE:
        t2 = theta * theta
        return 1.0 - t2 / 6.0 + t2 * t2 / 120.0, 0.5 - t2 / 24.0 + t2 * t2 / 720.0
    return math.sin(theta) / theta, (1.0 - math.cos(theta)) / (theta * theta)


@njit(cache=True)
def rod_slopes(theta):
    """a'(t)/t and b'(t)/t, finite at t = 0."""
    if theta < SMALL_ANGLE:
        t2 = theta * theta
        return (
            -1.0 / 3.0 + t2 / 30.0 - t2 * t2 / 840.0,
            -1.0 / 12.0 + t2 / 180.0 - t2 * t2 / 6720.0,
        )
    t2 = theta * theta
    s = math.sin(theta)
    c = math.cos(theta)
    return (theta * c - s) / (t2 * theta), (theta * s - 2.0 * (1.0 - c)) / (t2 * t2)


@njit(cache=True)
def exp3(f0, f1, f2):
    """Rodrigues rotation about (f0, f1, f2), written entrywise."""
    theta = math.sqrt(f0 * f0 + f1 * f1 + f2 * f2)
    a, b = rod_ab(theta)
    r = np.empty((3, 3))
    bxy = b * f0 * f1
    byz = b * f1 * f2
    bzx = b * f2 * f0
    r[0, 0] = 1.0 - b * (f1 * f1 + f2 * f2)
    r[0, 1] = bxy - a * f2
    r[0, 2] = bzx + a * f1
    r[1, 0] = bxy + a * f2
    r[1, 1] = 1.0 - b * (f0 * f0 + f2 * f2)
    r[1, 2] = byz - a * f0
    r[2, 0] = bzx - a * f1
    r[2, 1] = byz + a * f0
    r[2, 2] = 1.0 - b * (f0 * f0 + f1 * f1)
    return r


@njit(cache=True)
def adjugate3(m):
    """(adjugate, det, Frobenius condition estimate) of a 3x3 matrix."""
    a = m[0, 0]
    b = m[0, 1]
    c = m[0, 2]
    d = m[1, 0]
    e = m[1, 1]
    f = m[1, 2]
    g = m[2, 0]
    h = m[2, 1]
    i = m[2, 2]
    adj = np.empty((3, 3))
    adj[0, 0] = e * i - f * h
    adj[1, 0] = f * g - d * i
    adj[2, 0] = d * h - e * g
    det = a * adj[0, 0] + b * adj[1, 0] + c * adj[2, 0]
    adj[0, 1] = c * h - b * i
    adj[0, 2] = b * f - c * e
    adj[1, 1] = a * i - c * g
    adj[1, 2] = c * d - a * f
    adj[2, 1] = b * g - a * h
    adj[2, 2] = a * e - b * d
    norm_m = a * a + b * b + c * c + d * d + e * e + f * f + g * g + h * h + i * i
    norm_adj = 0.0
    for r in range(3):
        for s in range(3):
            norm_adj += adj[r, s] * adj[r, s]
    cond = math.inf if det == 0.0 else math.sqrt(norm_m * norm_adj) / abs(det)
    return adj, det, cond


@njit(cache=True)
def solve3(m, v):
    """Solve m @ x = v by the adjugate; returns (status, x)."""
    adj, det, cond = adjugate3(m)
    x = np.empty(3)
    if abs(det) < DET_FLOOR or cond > CONDITION_CEILING:
        return SINGULAR_SYSTEM, x
    for r in range(3):
        x[r] = (adj[r, 0] * v[0] + adj[r, 1] * v[1] + adj[r, 2] * v[2]) / det
    return OK, x


@njit(cache=True)
def step_newton(j, w0, w1, w2, h, analytic):
    """Newton solve of g(f) = a|f| J f + b|f| (f x J f) - h J w = 0.

    Returns (status, f0, f1, f2). Status 2 (angle >= pi/2) is decided by
    the caller's angle check on the converged root.
    """
    j00 = j[0, 0]
    j01 = j[0, 1]
    j02 = j[0, 2]
    j10 = j[1, 0]
    j11 = j[1, 1]
    j12 = j[1, 2]
    j20 = j[2, 0]
    j21 = j[2, 1]
    j22 = j[2, 2]
    t0 = h * (j00 * w0 + j01 * w1 + j02 * w2)
    t1 = h * (j10 * w0 + j11 * w1 + j12 * w2)
    t2 = h * (j20 * w0 + j21 * w1 + j22 * w2)
    f0 = h * w0
    f1 = h * w1
    f2 = h * w2
    for _ in range(NEWTON_MAX_ITER):
        theta = math.sqrt(f0 * f0 + f1 * f1 + f2 * f2)
        a, b = rod_ab(theta)
        p0 = j00 * f0 + j01 * f1 + j02 * f2
        p1 = j10 * f0 + j11 * f1 + j12 * f2
        p2 = j20 * f0 + j21 * f1 + j22 * f2
        c0 = f1 * p2 - f2 * p1
        c1 = f2 * p0 - f0 * p2
        c2 = f0 * p1 - f1 * p0
        g0 = a * p0 + b * c0 - t0
        g1 = a * p1 + b * c1 - t1
        g2 = a * p2 + b * c2 - t2
        if math.sqrt(g0 * g0 + g1 * g1 + g2 * g2) < NEWTON_TOL:
            return OK, f0, f1, f2
        if analytic:
            da, db = rod_slopes(theta)
            # dg = a J + da (Jf) f^T + b (hat(f) J - hat(Jf)) + db (f x Jf) f^T
            d00 = a * j00 + da * p0 * f0 + b * (-f2 * j10 + f1 * j20) + db * c0 * f0
            d01 = a * j01 + da * p0 * f1 + b * (-f2 * j11 + f1 * j21 + p2) + db * c0 * f1
            d02 = a * j02 + da * p0 * f2 + b * (-f2 * j12 + f1 * j22 - p1) + db * c0 * f2
            d10 = a * j10 + da * p1 * f0 + b * (f2 * j00 - f0 * j20 - p2) + db * c1 * f0
            d11 = a * j11 + da * p1 * f1 + b * (f2 * j01 - f0 * j21) + db * c1 * f1
            d12 = a * j12 + da * p1 * f2 + b * (f2 * j02 - f0 * j22 + p0) + db * c1 * f2
            d20 = a * j20 + da * p2 * f0 + b * (-f1 * j00 + f0 * j10 + p1) + db * c2 * f0
            d21 = a * j21 + da * p2 * f1 + b * (-f1 * j01 + f0 * j11 - p0) + db * c2 * f1
            d22 = a * j22 + da * p2 * f2 + b * (-f1 * j02 + f0 * j12) + db * c2 * f2
        else:
            # forward differences, relative step 1e-7
            s0 = 1e-7 * abs(f0)
            if s0 < 1e-10:
                s0 = 1e-10
            s1 = 1e-7 * abs(f1)
            if s1 < 1e-10:
                s1 = 1e-10
            s2 = 1e-7 * abs(f2)
            if s2 < 1e-10:
                s2 = 1e-10
            d00 = d01 = d02 = d10 = d11 = d12 = d20 = d21 = d22 = 0.0
            for col in range(3):
                e0 = f0
                e1 = f1
                e2 = f2
                if col == 0:
                    e0 += s0
                    step = s0
                elif col == 1:
                    e1 += s1
                    step = s1
                else:
                    e2 += s2
                    step = s2
                th = math.sqrt(e0 * e0 + e1 * e1 + e2 * e2)
                ap, bp = rod_ab(th)
                q0 = j00 * e0 + j01 * e1 + j02 * e2
                q1 = j10 * e0 + j11 * e1 + j12 * e2
                q2 = j20 * e0 + j21 * e1 + j22 * e2
                x0 = e1 * q2 - e2 * q1
                x1 = e2 * q0 - e0 * q2
                x2 = e0 * q1 - e1 * q0
                gp0 = (ap * q0 + bp * x0 - t0 - g0) / step
                gp1 = (ap * q1 + bp * x1 - t1 - g1) / step
                gp2 = (ap * q2 + bp * x2 - t2 - g2) / step
                if col == 0:
                    d00, d10, d20 = gp0, gp1, gp2
                elif col == 1:
                    d01, d11, d21 = gp0, gp1, gp2
                else:
                    d02, d12, d22 = gp0, gp1, gp2
        a00 = d11 * d22 - d12 * d21
        a10 = d12 * d20 - d10 * d22
        a20 = d10 * d21 - d11 * d20
        det = d00 * a00 + d01 * a10 + d02 * a20
        if abs(det) < 1e-14:
            return NO_CONVERGENCE, f0, f1, f2
        a01 = d02 * d21 - d01 * d22
        a02 = d01 * d12 - d02 * d11
        a11 = d00 * d22 - d02 * d20
        a12 = d02 * d10 - d00 * d12
        a21 = d01 * d20 - d00 * d21
        a22 = d00 * d11 - d01 * d10
        f0 -= (a00 * g0 + a01 * g1 + a02 * g2) / det
        f1 -= (a10 * g0 + a11 * g1 + a12 * g2) / det
        f2 -= (a20 * g0 + a21 * g1 + a22 * g2) / det
    return NO_CONVERGENCE, f0, f1, f2


@njit(cache=True)
def costate_step(lr_prev, lo_prev, f_prev, f_curr, w, j, jd, h):
    """One step of the discrete costate recursions; see
    optimality.propagate_multipliers for the equations."""
    tr_prev = f_prev[0, 0] + f_prev[1, 1] + f_prev[2, 2]
    tr_curr = f_curr[0, 0] + f_curr[1, 1] + f_curr[2, 2]
    transported = tr_prev * lr_prev - f_prev @ lr_prev
    t_curr = -f_curr.copy()
    for r in range(3):
        t_curr[r, r] += tr_curr
    status, lam_r = solve3(t_curr, f_curr.T @ transported)
    if status != OK:
        return status, lam_r, lam_r

    fjd = f_curr @ jd
    m = -fjd.copy()
    tr_fjd = fjd[0, 0] + fjd[1, 1] + fjd[2, 2]
    for r in range(3):
        m[r, r] += tr_fjd
    adj, det, cond = adjugate3(m)
    if abs(det) < DET_FLOOR or cond > CONDITION_CEILING:
        return SINGULAR_SYSTEM, lam_r, lam_r
    bt = (h / det) * (adj.T @ f_curr)  # B_k^T = h M^{-T} F_k

    jw = j @ w
    v = f_curr.T @ jw
    hat_v = np.empty((3, 3))
    hat_v[0, 0] = 0.0
    hat_v[0, 1] = -v[2]
    hat_v[0, 2] = v[1]
    hat_v[1, 0] = v[2]
    hat_v[1, 1] = 0.0
    hat_v[1, 2] = -v[0]
    hat_v[2, 0] = -v[1]
    hat_v[2, 1] = v[0]
    hat_v[2, 2] = 0.0
    a_sys = j @ (f_curr - bt @ hat_v)
    rhs = j @ lo_prev - 0.5 * (j @ (bt @ (tr_curr * lam_r - f_curr @ lam_r)))
    status, lam_o = solve3(a_sys, rhs)
    return status, lam_r, lam_o


@njit(cache=True)
def extremal_loop(r0, w0, lr0, lo0, j, jd, j_inv, u_max, n, h):
    """Interleaved state/costate propagation of the discrete necessary
    conditions. Returns (status, failing_index, R, W, F, U, LR, LO)."""
    rs = np.empty((n + 1, 3, 3))
    ws = np.empty((n + 1, 3))
    fs = np.empty((n, 3, 3))
    us = np.empty((n, 3))
    lrs = np.empty((n, 3))
    los = np.empty((n, 3))
    rs[0] = r0
    ws[0] = w0
    lrs[0] = lr0
    los[0] = lo0
    for k in range(n):
        w = ws[k]
        status, f0, f1, f2 = step_newton(j, w[0], w[1], w[2], h, True)
        if status != OK:
            return status, k, rs, ws, fs, us, lrs, los
        if math.sqrt(f0 * f0 + f1 * f1 + f2 * f2) >= MAX_STEP_ANGLE:
            return STEP_TOO_LARGE, k, rs, ws, fs, us, lrs, los
        fk = exp3(f0, f1, f2)
        fs[k] = fk
        if k >= 1:
            status, lam_r, lam_o = costate_step(
                lrs[k - 1], los[k - 1], fs[k - 1], fk, w, j, jd, h
            )
            if status != OK:
                return status, k, rs, ws, fs, us, lrs, los
            lrs[k] = lam_r
            los[k] = lam_o
        lo = los[k]
        lo_norm = math.sqrt(lo[0] * lo[0] + lo[1] * lo[1] + lo[2] * lo[2])
        if lo_norm < SINGULAR_ARC_FLOOR:
            return SINGULAR_ARC, k, rs, ws, fs, us, lrs, los
        scale = -u_max / lo_norm
        us[k, 0] = scale * lo[0]
        us[k, 1] = scale * lo[1]
        us[k, 2] = scale * lo[2]
        rs[k + 1] = rs[k] @ fk
        ws[k + 1] = j_inv @ (fk.T @ (j @ w) + h * us[k])
    return OK, n, rs, ws, fs, us, lrs, los
