# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled observer kernel.

Same signature, layout and arithmetic as ``_kernels_py.observer_kernel``;
the linearly-implicit step solves its dense system with partially pivoted
Gaussian elimination.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, log, sin, sqrt

cnp.import_array()

MODE_EVAL = 0
MODE_EULER = 1
MODE_IMEX = 2

IMPLEMENTATION = "cython"

cdef double GUARD = 1.0 - 1e-12


cdef inline void skew3(const double* v, double* K) noexcept nogil:
    K[0] = 0.0;   K[1] = -v[2]; K[2] = v[1]
    K[3] = v[2];  K[4] = 0.0;   K[5] = -v[0]
    K[6] = -v[1]; K[7] = v[0];  K[8] = 0.0


cdef inline void matmul3(const double* A, const double* B, double* C) noexcept nogil:
    cdef int r, c, k
    cdef double acc
    for r in range(3):
        for c in range(3):
            acc = 0.0
            for k in range(3):
                acc = acc + A[3 * r + k] * B[3 * k + c]
            C[3 * r + c] = acc


cdef inline void cross3(const double* a, const double* b, double* out) noexcept nogil:
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]


cdef void exp3(const double* w, double* out) noexcept nogil:
    cdef double K[9]
    cdef double K2[9]
    cdef double th = sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2])
    cdef double a, b
    cdef int j
    skew3(w, K)
    matmul3(K, K, K2)
    if th < 1e-8:
        a = 1.0
        b = 0.5
    else:
        a = sin(th) / th
        b = (1.0 - cos(th)) / (th * th)
    for j in range(9):
        out[j] = a * K[j] + b * K2[j]
    out[0] += 1.0
    out[4] += 1.0
    out[8] += 1.0


cdef void quat_rot(const double* Q, double* R) noexcept nogil:
    cdef double q0 = Q[0], q1 = Q[1], q2 = Q[2], q3 = Q[3]
    cdef double d = q0 * q0 - (q1 * q1 + q2 * q2 + q3 * q3)
    R[0] = d + 2.0 * q1 * q1
    R[1] = 2.0 * q1 * q2 - 2.0 * q0 * q3
    R[2] = 2.0 * q1 * q3 + 2.0 * q0 * q2
    R[3] = 2.0 * q2 * q1 + 2.0 * q0 * q3
    R[4] = d + 2.0 * q2 * q2
    R[5] = 2.0 * q2 * q3 - 2.0 * q0 * q1
    R[6] = 2.0 * q3 * q1 - 2.0 * q0 * q2
    R[7] = 2.0 * q3 * q2 + 2.0 * q0 * q1
    R[8] = d + 2.0 * q3 * q3


cdef void quat_step(const double* Q, const double* w, double* out) noexcept nogil:
    cdef double th = sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2])
    cdef double p0, p1, p2, p3, s, nrm
    if th < 1e-8:
        p0 = 1.0 - th * th / 8.0
        p1 = 0.5 * w[0]
        p2 = 0.5 * w[1]
        p3 = 0.5 * w[2]
    else:
        s = sin(0.5 * th) / th
        p0 = cos(0.5 * th)
        p1 = s * w[0]
        p2 = s * w[1]
        p3 = s * w[2]
    cdef double q0 = Q[0], q1 = Q[1], q2 = Q[2], q3 = Q[3]
    out[0] = q0 * p0 - (q1 * p1 + q2 * p2 + q3 * p3)
    out[1] = q0 * p1 + p0 * q1 + (q2 * p3 - q3 * p2)
    out[2] = q0 * p2 + p0 * q2 + (q3 * p1 - q1 * p3)
    out[3] = q0 * p3 + p0 * q3 + (q1 * p2 - q2 * p1)
    nrm = sqrt(out[0] * out[0] + out[1] * out[1] + out[2] * out[2] + out[3] * out[3])
    out[0] /= nrm
    out[1] /= nrm
    out[2] /= nrm
    out[3] /= nrm


cdef int solve_dense(double* A, double* b, int m) noexcept nogil:
    """In-place solve of ``A z = b`` (row-major ``A``); ``b`` receives ``z``."""
    cdef int col, r, piv, c
    cdef double best, v, f, tmp
    for col in range(m):
        piv = col
        best = A[col * m + col]
        if best < 0:
            best = -best
        for r in range(col + 1, m):
            v = A[r * m + col]
            if v < 0:
                v = -v
            if v > best:
                best = v
                piv = r
        if best == 0.0:
            return -1
        if piv != col:
            for c in range(m):
                tmp = A[col * m + c]
                A[col * m + c] = A[piv * m + c]
                A[piv * m + c] = tmp
            tmp = b[col]
            b[col] = b[piv]
            b[piv] = tmp
        for r in range(col + 1, m):
            f = A[r * m + col] / A[col * m + col]
            if f != 0.0:
                for c in range(col, m):
                    A[r * m + c] -= f * A[col * m + c]
                b[r] -= f * b[col]
    for r in range(m - 1, -1, -1):
        v = b[r]
        for c in range(r + 1, m):
            v -= A[r * m + c] * b[c]
        b[r] = v / A[r * m + r]
    return 0


def observer_kernel(rot, P_in, phat_in, bhat_in, u_m_in, y_in, xi_in, dbar_in, dund_in,
                    double kp, double kw, Gamma_in, alpha_in, double dt, int mode):
    """Evaluate the observer at one instant and optionally advance it by ``dt``.

    Returns ``(rot, P, phat, bhat, e, E, lam, W, status)``; see the Python
    implementation for the meaning of each entry.
    """
    cdef bint quaternion = np.ndim(rot) == 1
    cdef const double[::1] rot_flat = np.ascontiguousarray(rot, dtype=np.float64).ravel()
    cdef const double[::1] P = np.ascontiguousarray(P_in, dtype=np.float64)
    cdef const double[:, ::1] phat = np.ascontiguousarray(phat_in, dtype=np.float64)
    cdef const double[::1] bhat = np.ascontiguousarray(bhat_in, dtype=np.float64)
    cdef const double[::1] u_m = np.ascontiguousarray(u_m_in, dtype=np.float64)
    cdef const double[:, ::1] y = np.ascontiguousarray(y_in, dtype=np.float64)
    cdef const double[:, ::1] xi = np.ascontiguousarray(xi_in, dtype=np.float64)
    cdef const double[:, ::1] dbar = np.ascontiguousarray(dbar_in, dtype=np.float64)
    cdef const double[:, ::1] dund = np.ascontiguousarray(dund_in, dtype=np.float64)
    cdef const double[:, ::1] Gamma = np.ascontiguousarray(Gamma_in, dtype=np.float64)
    cdef const double[::1] alpha = np.ascontiguousarray(alpha_in, dtype=np.float64)

    cdef int n = y.shape[0]
    cdef int M = 12 + 3 * n
    cdef int i, k, r, c, j, status = -1
    cdef double R[9]
    cdef double Rn[9]
    cdef double Ex[9]
    cdef double tmp9[9]
    cdef double Ky[9]
    cdef double Kx[9]
    cdef double KP[9]
    cdef double v3[3]
    cdef double w3[3]
    cdef double S_om[3]
    cdef double S_v[3]
    cdef double Sb_om[3]
    cdef double Sb_v[3]
    cdef double adT[6]
    cdef double s, a, b, inv_a, acc, lam_ik

    if quaternion:
        quat_rot(&rot_flat[0], R)
    else:
        for j in range(9):
            R[j] = rot_flat[j]

    e_arr = np.empty((n, 3))
    E_arr = np.empty((n, 3))
    lam_arr = np.empty((n, 3))
    x_arr = np.empty((n, 3))
    a_arr = np.empty((n, 3))
    b_arr = np.empty((n, 3))
    cdef double[:, ::1] e = e_arr
    cdef double[:, ::1] E = E_arr
    cdef double[:, ::1] lam = lam_arr
    cdef double[:, ::1] x = x_arr
    cdef double[:, ::1] av = a_arr
    cdef double[:, ::1] bv = b_arr

    for i in range(n):
        for r in range(3):
            acc = 0.0
            for k in range(3):
                acc = acc + R[3 * r + k] * y[i, k]
            x[i, r] = acc + P[r]
            e[i, r] = phat[i, r] - x[i, r]
    for i in range(n):
        for k in range(3):
            s = e[i, k] / xi[i, k]
            if not (s > -dund[i, k] * GUARD and s < dbar[i, k] * GUARD):
                if status < 0:
                    status = 3 * i + k
            av[i, k] = dund[i, k] + s
            bv[i, k] = dbar[i, k] - s
    if status >= 0:
        nan = np.full((n, 3), np.nan)
        return rot, P_in, phat_in, bhat_in, e_arr, nan, nan.copy(), np.full(6, np.nan), status

    for j in range(3):
        S_om[j] = 0.0
        S_v[j] = 0.0
        Sb_om[j] = 0.0
        Sb_v[j] = 0.0
    for i in range(n):
        inv_a = 1.0 / alpha[i]
        for k in range(3):
            a = av[i, k]
            b = bv[i, k]
            E[i, k] = 0.5 * log(a / b)
            lam[i, k] = (1.0 / (2.0 * xi[i, k])) * (1.0 / a + 1.0 / b)
            w3[k] = lam[i, k] * E[i, k]
            v3[k] = x[i, k]
        cross3(v3, w3, tmp9)
        for k in range(3):
            S_om[k] += tmp9[k]
            S_v[k] += w3[k]
            Sb_om[k] += tmp9[k] * inv_a
            Sb_v[k] += w3[k] * inv_a

    W_arr = np.empty(6)
    cdef double[::1] W = W_arr
    cross3(&P[0], S_om, v3)
    for r in range(3):
        w3[r] = S_v[r] - v3[r]
    for r in range(3):
        acc = 0.0
        a = 0.0
        for k in range(3):
            acc = acc + R[3 * k + r] * S_om[k]
            a = a + R[3 * k + r] * w3[k]
        W[r] = -kw * acc
        W[3 + r] = -kw * a
    if mode == 0:
        return rot, P_in, phat_in, bhat_in, e_arr, E_arr, lam_arr, W_arr, -1

    # bias rate: -Gamma Ad^T Sb
    cross3(&P[0], Sb_v, v3)
    for r in range(3):
        w3[r] = Sb_om[r] - v3[r]
    for r in range(3):
        acc = 0.0
        a = 0.0
        for k in range(3):
            acc = acc + R[3 * k + r] * w3[k]
            a = a + R[3 * k + r] * Sb_v[k]
        adT[r] = acc
        adT[3 + r] = a

    C_arr = np.empty(M)
    cdef double[::1] C = C_arr
    for r in range(3):
        C[r] = -W[r]
        acc = 0.0
        for k in range(3):
            acc = acc + R[3 * r + k] * W[3 + k]
        C[3 + r] = -acc
    for i in range(n):
        for k in range(3):
            lam_ik = lam[i, k]
            C[6 + 3 * i + k] = -kp * (lam_ik + 1.0 / lam_ik) * E[i, k]
    for r in range(6):
        acc = 0.0
        for k in range(6):
            acc = acc + Gamma[r, k] * adT[k]
        C[M - 6 + r] = -acc

    cdef double[:, ::1] J
    cdef double[:, ::1] dS
    cdef double[:, ::1] dSb
    cdef double[:, ::1] A
    cdef double[::1] D
    cdef double[::1] Kc
    cdef double dlam, col0, col1, col2, lo, hi
    cdef int cols[9]
    cdef int q, cc
    if mode == 2:
        J_arr = np.zeros((M, M))
        J = J_arr
        dS = np.zeros((6, M))
        dSb = np.zeros((6, M))
        A = np.zeros((3, 9))
        D = np.empty(3)
        Kc = np.empty(3)
        skew3(&P[0], KP)
        for i in range(n):
            inv_a = 1.0 / alpha[i]
            for k in range(3):
                a = av[i, k]
                b = bv[i, k]
                lam_ik = lam[i, k]
                dlam = (1.0 / (2.0 * xi[i, k] * xi[i, k])) * (1.0 / (b * b) - 1.0 / (a * a))
                D[k] = dlam * E[i, k] + lam_ik * lam_ik
                Kc[k] = (dlam - dlam / (lam_ik * lam_ik)) * E[i, k] + (lam_ik + 1.0 / lam_ik) * lam_ik
            # nonzero columns of A_i: rotation, position, landmark i
            for q in range(3):
                cols[q] = q
                cols[3 + q] = 3 + q
                cols[6 + q] = 6 + 3 * i + q
            for k in range(3):
                v3[k] = y[i, k]
            skew3(v3, Ky)
            matmul3(R, Ky, tmp9)
            for r in range(3):
                for q in range(3):
                    A[r, q] = tmp9[3 * r + q]
                    A[r, 3 + q] = -1.0 if r == q else 0.0
                    A[r, 6 + q] = 1.0 if r == q else 0.0
            for k in range(3):
                v3[k] = x[i, k]
            skew3(v3, Kx)
            for q in range(9):
                cc = cols[q]
                col0 = D[0] * A[0, q]
                col1 = D[1] * A[1, q]
                col2 = D[2] * A[2, q]
                for r in range(3):
                    acc = Kx[3 * r] * col0 + Kx[3 * r + 1] * col1 + Kx[3 * r + 2] * col2
                    dS[r, cc] += acc
                    dSb[r, cc] += inv_a * acc
                dS[3, cc] += col0
                dS[4, cc] += col1
                dS[5, cc] += col2
                dSb[3, cc] += inv_a * col0
                dSb[4, cc] += inv_a * col1
                dSb[5, cc] += inv_a * col2
                for r in range(3):
                    J[6 + 3 * i + r, cc] = -kp * Kc[r] * A[r, q]
        for cc in range(M):
            # rows 0..2: -dW_om = kw R^T dS_om
            for r in range(3):
                v3[r] = dS[3 + r, cc] - (KP[3 * r] * dS[0, cc] + KP[3 * r + 1] * dS[1, cc]
                                         + KP[3 * r + 2] * dS[2, cc])
            for r in range(3):
                acc = 0.0
                a = 0.0
                for k in range(3):
                    acc = acc + R[3 * k + r] * dS[k, cc]
                    a = a + R[3 * k + r] * v3[k]
                J[r, cc] = -(-kw * acc)
                w3[r] = -kw * a
            for r in range(3):
                acc = 0.0
                for k in range(3):
                    acc = acc + R[3 * r + k] * w3[k]
                J[3 + r, cc] = -acc
            # bias rows: -Gamma Ad^T dSb
            for r in range(3):
                v3[r] = dSb[r, cc] - (KP[3 * r] * dSb[3, cc] + KP[3 * r + 1] * dSb[4, cc]
                                      + KP[3 * r + 2] * dSb[5, cc])
            for r in range(3):
                acc = 0.0
                a = 0.0
                for k in range(3):
                    acc = acc + R[3 * k + r] * v3[k]
                    a = a + R[3 * k + r] * dSb[3 + k, cc]
                adT[r] = acc
                adT[3 + r] = a
            for r in range(6):
                acc = 0.0
                for k in range(6):
                    acc = acc + Gamma[r, k] * adT[k]
                J[M - 6 + r, cc] = -acc
        for r in range(3):
            J[r, M - 6 + r] -= 1.0
            for k in range(3):
                J[3 + r, M - 3 + k] -= R[3 * r + k]
        # (I - dt J) z = C, solved in place
        for r in range(M):
            for cc in range(M):
                J[r, cc] = -dt * J[r, cc]
            J[r, r] += 1.0
        if solve_dense(&J[0, 0], &C[0], M) != 0:
            raise np.linalg.LinAlgError("singular implicit-step matrix")

    inc_arr = np.empty(M)
    cdef double[::1] inc = inc_arr
    for r in range(M):
        inc[r] = dt * C[r]
    for r in range(3):
        inc[r] += dt * (u_m[r] - bhat[r])
        v3[r] = u_m[3 + r] - bhat[3 + r]
    for r in range(3):
        inc[3 + r] += dt * (R[3 * r] * v3[0] + R[3 * r + 1] * v3[1] + R[3 * r + 2] * v3[2])

    P_new = np.empty(3)
    phat_new = np.empty((n, 3))
    bhat_new = np.empty(6)
    cdef double[::1] Pn = P_new
    cdef double[:, ::1] pn = phat_new
    cdef double[::1] bn = bhat_new
    for r in range(3):
        Pn[r] = P[r] + inc[3 + r]
    for i in range(n):
        for k in range(3):
            pn[i, k] = phat[i, k] + inc[6 + 3 * i + k]
    for r in range(6):
        bn[r] = bhat[r] + inc[M - 6 + r]

    cdef double[::1] out_rot
    if quaternion:
        rot_new = np.empty(4)
        out_rot = rot_new
        quat_step(&rot_flat[0], &inc[0], &out_rot[0])
    else:
        exp3(&inc[0], Ex)
        matmul3(R, Ex, Rn)
        # one Newton-Schulz polish: 0.5 Rn (3I - Rn^T Rn)
        for r in range(3):
            for c in range(3):
                acc = 0.0
                for k in range(3):
                    acc = acc + Rn[3 * k + r] * Rn[3 * k + c]
                tmp9[3 * r + c] = (3.0 if r == c else 0.0) - acc
        rot_new = np.empty((3, 3))
        out_rot = rot_new.reshape(9)
        matmul3(Rn, tmp9, &out_rot[0])
        for j in range(9):
            out_rot[j] *= 0.5
    return rot_new, P_new, phat_new, bhat_new, e_arr, E_arr, lam_arr, W_arr, -1
