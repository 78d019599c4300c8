"""Pure-Python observer kernel (numpy).

Mirrors ``_kernels.pyx`` operation for operation; used when the compiled
extension is unavailable or ``PPSLAM_PURE_PYTHON=1`` is set.

State layout for the increment vector (length ``12 + 3n``)::

    [ dtheta (3) | dP (3) | dp_1 .. dp_n (3n) | db (6) ]

``dtheta`` is a body-frame rotation increment (``R <- R exp([dtheta]x)``).
"""

from __future__ import annotations

import math

import numpy as np

MODE_EVAL = 0
MODE_EULER = 1
MODE_IMEX = 2

IMPLEMENTATION = "python"


def _skew(v):
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def _exp3(w):
    th = math.sqrt(float(w @ w))
    K = _skew(w)
    if th < 1e-8:
        return np.eye(3) + K + 0.5 * (K @ K)
    return np.eye(3) + (math.sin(th) / th) * K + ((1.0 - math.cos(th)) / (th * th)) * (K @ K)


def _quat_rot(Q):
    q0, q = Q[0], Q[1:]
    return (q0 * q0 - q @ q) * np.eye(3) + 2.0 * np.outer(q, q) + 2.0 * q0 * _skew(q)


def _quat_step(Q, w):
    th = math.sqrt(float(w @ w))
    if th < 1e-8:
        dq = np.array([1.0 - th * th / 8.0, 0.5 * w[0], 0.5 * w[1], 0.5 * w[2]])
    else:
        s = math.sin(0.5 * th) / th
        dq = np.array([math.cos(0.5 * th), s * w[0], s * w[1], s * w[2]])
    q0, q = Q[0], Q[1:]
    p0, p = dq[0], dq[1:]
    out = np.concatenate([[q0 * p0 - q @ p], q0 * p + p0 * q + np.cross(q, p)])
    return out / math.sqrt(float(out @ out))


def observer_kernel(rot, P, phat, bhat, u_m, y, xi, dbar, dund,
                    kp, kw, Gamma, alpha, dt, mode):
    """Evaluate the observer at one instant and optionally advance it by ``dt``.

    Returns ``(rot, P, phat, bhat, e, E, lam, W, status)`` where ``status`` is
    -1 on success or the flat index of the first component outside its
    envelope (in which case the state is returned unchanged).
    """
    quaternion = rot.ndim == 1
    R = _quat_rot(rot) if quaternion else rot
    n = y.shape[0]

    x = y @ R.T + P
    e = phat - x
    s = e / xi
    ok = (s > -dund * (1.0 - 1e-12)) & (s < dbar * (1.0 - 1e-12))
    if not ok.all():
        status = int(np.flatnonzero(~ok)[0])
        nan = np.full((n, 3), np.nan)
        return rot, P, phat, bhat, e, nan, nan, np.full(6, np.nan), status

    a = dund + s
    b = dbar - s
    E = 0.5 * np.log(a / b)
    lam = (1.0 / (2.0 * xi)) * (1.0 / a + 1.0 / b)
    LE = lam * E

    S_om = np.cross(x, LE).sum(axis=0)
    S_v = LE.sum(axis=0)
    inv_a = 1.0 / alpha
    Sb_om = (np.cross(x, LE) * inv_a[:, None]).sum(axis=0)
    Sb_v = (LE * inv_a[:, None]).sum(axis=0)

    Rt = R.T
    W = np.concatenate([-kw * (Rt @ S_om), -kw * (Rt @ (S_v - np.cross(P, S_om)))])
    if mode == MODE_EVAL:
        return rot, P, phat, bhat, e, E, lam, W, -1

    adT_Sb = np.concatenate([Rt @ (Sb_om - np.cross(P, Sb_v)), Rt @ Sb_v])
    bdot = -Gamma @ adT_Sb
    pdot = -kp * (lam + 1.0 / lam) * E

    M = 12 + 3 * n
    C = np.empty(M)
    C[0:3] = -W[:3]
    C[3:6] = -(R @ W[3:])
    C[6:6 + 3 * n] = pdot.ravel()
    C[6 + 3 * n:] = bdot

    if mode == MODE_IMEX:
        dlam = (1.0 / (2.0 * xi * xi)) * (1.0 / (b * b) - 1.0 / (a * a))
        D = dlam * E + lam * lam
        K = (dlam - dlam / (lam * lam)) * E + (lam + 1.0 / lam) * lam
        dS = np.zeros((6, M))
        dSb = np.zeros((6, M))
        J = np.zeros((M, M))
        for i in range(n):
            A = np.zeros((3, M))
            A[:, 0:3] = R @ _skew(y[i])
            A[:, 3:6] = -np.eye(3)
            A[:, 6 + 3 * i:9 + 3 * i] = np.eye(3)
            DA = D[i][:, None] * A
            Pi_DA = np.vstack([_skew(x[i]) @ DA, DA])
            dS += Pi_DA
            dSb += inv_a[i] * Pi_DA
            J[6 + 3 * i:9 + 3 * i, :] = -kp * K[i][:, None] * A
        dW_om = -kw * (Rt @ dS[:3])
        dW_v = -kw * (Rt @ (dS[3:] - _skew(P) @ dS[:3]))
        J[0:3, :] = -dW_om
        J[3:6, :] = -(R @ dW_v)
        adT_dSb = np.vstack([Rt @ (dSb[:3] - _skew(P) @ dSb[3:]), Rt @ dSb[3:]])
        J[M - 6:, :] = -Gamma @ adT_dSb
        J[0:3, M - 6:M - 3] -= np.eye(3)
        J[3:6, M - 3:] -= R
        inc = dt * np.linalg.solve(np.eye(M) - dt * J, C)
    else:
        inc = dt * C

    inc[0:3] += dt * (u_m[:3] - bhat[:3])
    inc[3:6] += dt * (R @ (u_m[3:] - bhat[3:]))

    if quaternion:
        rot_new = _quat_step(rot, inc[0:3])
    else:
        Rn = R @ _exp3(inc[0:3])
        rot_new = 0.5 * Rn @ (3.0 * np.eye(3) - Rn.T @ Rn)
    P_new = P + inc[3:6]
    phat_new = phat + inc[6:6 + 3 * n].reshape(n, 3)
    bhat_new = bhat + inc[6 + 3 * n:]
    return rot_new, P_new, phat_new, bhat_new, e, E, lam, W, -1
