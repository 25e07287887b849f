# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Kutta-Merson kernel.

Same algorithm, state layout and return contract as ``_pykernel.advance``;
the trajectory, coupling assembly and stage arithmetic run without the
interpreter.
"""

import numpy as np

from libc.math cimport sin, cos, sqrt, fabs, isfinite, pow, M_PI
from scipy.linalg.cython_blas cimport dgemm

from ._pykernel import NonFiniteState, StepSizeUnderflow

cdef double SAFETY = 0.9
cdef double MIN_FACTOR = 0.2
cdef double MAX_FACTOR = 5.0


cdef struct Params:
    double aL, wL, phL, aR, wR, phR, L0, tF, ramp, M


cdef struct Kin:
    double L, R, Ld, Rd, Ldd, Rdd


cdef void envelope(double t, double tF, double ramp,
                   double* f, double* df, double* ddf) noexcept nogil:
    cdef double k, u, g, dg, ddg, nf, ndf, nddf
    f[0] = 1.0
    df[0] = 0.0
    ddf[0] = 0.0
    if ramp <= 0.0:
        return
    k = M_PI / ramp
    if t < ramp:
        u = k * t
        f[0] = sin(0.5 * u) * sin(0.5 * u)
        df[0] = 0.5 * k * sin(u)
        ddf[0] = 0.5 * k * k * cos(u)
    if tF - t < ramp:
        u = k * (tF - t)
        g = sin(0.5 * u) * sin(0.5 * u)
        dg = -0.5 * k * sin(u)
        ddg = 0.5 * k * k * cos(u)
        nf = f[0] * g
        ndf = df[0] * g + f[0] * dg
        nddf = ddf[0] * g + 2.0 * df[0] * dg + f[0] * ddg
        f[0] = nf
        df[0] = ndf
        ddf[0] = nddf


cdef void displacement(double a, double w, double ph, double t, Params* P,
                       double* x, double* v, double* acc) noexcept nogil:
    cdef double s, ds, dds, f, df, ddf
    cdef bint moving
    x[0] = 0.0
    v[0] = 0.0
    acc[0] = 0.0
    if a == 0.0:
        return
    if t == 0.0:
        if P.ramp <= 0.0:
            v[0] = a * w * cos(ph)
            acc[0] = -a * w * w * sin(ph)
        return
    if t < 0.0:
        return
    moving = t <= P.tF
    if not moving:
        t = P.tF
    s = a * (sin(w * t + ph) - sin(ph))
    ds = a * w * cos(w * t + ph)
    dds = -a * w * w * sin(w * t + ph)
    envelope(t, P.tF, P.ramp, &f, &df, &ddf)
    x[0] = f * s
    if moving:
        v[0] = df * s + f * ds
        acc[0] = ddf * s + 2.0 * df * ds + f * dds


cdef Kin kinematics(Params* P, double t) noexcept nogil:
    cdef Kin k
    displacement(P.aL, P.wL, P.phL, t, P, &k.L, &k.Ld, &k.Ldd)
    displacement(P.aR, P.wR, P.phR, t, P, &k.R, &k.Rd, &k.Rdd)
    k.R = k.R + P.L0
    return k


cdef int deriv(const double* y, double t, Params* P, int rows, int K,
               const double* b_right, const double* b_left, const double* c2,
               const double* k2, const double* kpi,
               double* bd, double* S, double* out) noexcept nogil:
    cdef Kin k = kinematics(P, t)
    cdef double d = k.R - k.L
    cdef double dd = k.Rd - k.Ld
    cdef double inv4d2, invd, w2, vel2, acc
    cdef int n = rows * K
    cdef int r, m, s, i
    cdef const double* Q = y
    cdef const double* U = y + n
    cdef double* dU = out + n
    if not d > 0.0:
        return -1
    for i in range(n):
        out[i] = U[i]
    if k.Ld == 0.0 and k.Rd == 0.0 and k.Ldd == 0.0 and k.Rdd == 0.0:
        for r in range(rows):
            for m in range(K):
                w2 = (kpi[m] / d) * (kpi[m] / d) + P.M * P.M
                dU[r * K + m] = -w2 * Q[r * K + m]
        return 0
    inv4d2 = 0.25 / (d * d)
    invd = 1.0 / d
    vel2 = k.Rd * k.Rd + k.Rd * k.Ld + k.Ld * k.Ld
    # S and bd are stored transposed (index s * K + m): column-major S
    for s in range(K):
        for m in range(K):
            i = m * K + s
            acc = k.Rd * b_right[i] + k.Ld * b_left[i]
            S[s * K + m] = (dd * c2[i] * acc
                            - 2.0 * d * (k.Rdd * b_right[i] + k.Ldd * b_left[i])) * inv4d2
            bd[s * K + m] = acc * invd
    for m in range(K):
        w2 = (kpi[m] / d) * (kpi[m] / d) + P.M * P.M
        S[m * K + m] += (dd * dd + k2[m] * vel2) * inv4d2 - w2
    # row-major dU = Q S^T - U bd^T, i.e. column-major dU^T = S Q^T - bd U^T
    cdef char trans = b'N'
    cdef double one = 1.0, minus = -1.0, zero = 0.0
    dgemm(&trans, &trans, &K, &rows, &K, &one, S, &K, <double*>Q, &K, &zero, dU, &K)
    dgemm(&trans, &trans, &K, &rows, &K, &minus, bd, &K, <double*>U, &K, &one, dU, &K)
    return 0


cdef Params _params(double[::1] p, double M):
    cdef Params P
    P.aL = p[0]; P.wL = p[1]; P.phL = p[2]
    P.aR = p[3]; P.wR = p[4]; P.phR = p[5]
    P.L0 = p[6]; P.tF = p[7]; P.ramp = p[8]; P.M = M
    return P


def derivative(y, double t, double[::1] p, double M, mats, out=None):
    """Time derivative of ``y``; same contract as ``_pykernel.derivative``."""
    cdef double[:, :, ::1] yv = np.ascontiguousarray(y, dtype=float)
    cdef int rows = yv.shape[1]
    cdef int K = yv.shape[2]
    cdef Params P = _params(p, M)
    result = np.empty((2, rows, K), dtype=float)
    cdef double[:, :, ::1] rv = result
    cdef double[::1] b_right = np.ascontiguousarray(mats.b_right, dtype=float).ravel()
    cdef double[::1] b_left = np.ascontiguousarray(mats.b_left, dtype=float).ravel()
    cdef double[::1] c2 = np.ascontiguousarray(mats.c2, dtype=float).ravel()
    cdef double[::1] k2 = np.ascontiguousarray(mats.k2, dtype=float)
    cdef double[::1] kpi = np.ascontiguousarray(mats.kpi, dtype=float)
    cdef double[::1] bd = np.empty(K * K, dtype=float)
    cdef double[::1] S = np.empty(K * K, dtype=float)
    if deriv(&yv[0, 0, 0], t, &P, rows, K, &b_right[0], &b_left[0], &c2[0], &k2[0],
             &kpi[0], &bd[0], &S[0], &rv[0, 0, 0]) != 0:
        raise NonFiniteState(f"cavity collapsed at t={t}")
    if out is None:
        return result
    out[...] = result
    return out


def advance(double[:, :, ::1] y, double t, double t_end, double h,
            double[::1] p, double M, mats, double atol, double rtol,
            double h_max, double h_min, double fixed_step):
    """Advance ``y`` in place from ``t`` to exactly ``t_end``.

    Returns ``(t_end, h_next, accepted, rejected)``.
    """
    cdef Params P = _params(p, M)
    cdef int rows = y.shape[1]
    cdef int K = y.shape[2]
    cdef int n = 2 * rows * K
    cdef double[::1] b_right = np.ascontiguousarray(mats.b_right, dtype=float).ravel()
    cdef double[::1] b_left = np.ascontiguousarray(mats.b_left, dtype=float).ravel()
    cdef double[::1] c2 = np.ascontiguousarray(mats.c2, dtype=float).ravel()
    cdef double[::1] k2 = np.ascontiguousarray(mats.k2, dtype=float)
    cdef double[::1] kpi = np.ascontiguousarray(mats.kpi, dtype=float)
    work = np.empty((8, n), dtype=float)
    cdef double[:, ::1] w = work
    cdef double[::1] bd = np.empty(K * K, dtype=float)
    cdef double[::1] S = np.empty(K * K, dtype=float)
    cdef double* yp = &y[0, 0, 0]
    cdef double* k1 = &w[0, 0]
    cdef double* k2s = &w[1, 0]
    cdef double* k3 = &w[2, 0]
    cdef double* k4 = &w[3, 0]
    cdef double* k5 = &w[4, 0]
    cdef double* tmp = &w[5, 0]
    cdef double* ynew = &w[6, 0]
    cdef double hh, remaining, err_norm, e, sc, factor, h_new
    cdef bint clipped, adaptive = not fixed_step > 0.0
    cdef long accepted = 0, rejected = 0
    cdef int i, status = 0
    cdef bint finite
    if not adaptive:
        h = fixed_step
    with nogil:
        while t < t_end:
            remaining = t_end - t
            clipped = h >= remaining
            hh = remaining if clipped else h
            status = deriv(yp, t, &P, rows, K, &b_right[0], &b_left[0], &c2[0],
                           &k2[0], &kpi[0], &bd[0], &S[0], k1)
            for i in range(n):
                tmp[i] = yp[i] + (hh / 3.0) * k1[i]
            status |= deriv(tmp, t + hh / 3.0, &P, rows, K, &b_right[0], &b_left[0],
                            &c2[0], &k2[0], &kpi[0], &bd[0], &S[0], k2s)
            for i in range(n):
                tmp[i] = yp[i] + (hh / 6.0) * (k1[i] + k2s[i])
            status |= deriv(tmp, t + hh / 3.0, &P, rows, K, &b_right[0], &b_left[0],
                            &c2[0], &k2[0], &kpi[0], &bd[0], &S[0], k3)
            for i in range(n):
                tmp[i] = yp[i] + (hh / 8.0) * (k1[i] + 3.0 * k3[i])
            status |= deriv(tmp, t + 0.5 * hh, &P, rows, K, &b_right[0], &b_left[0],
                            &c2[0], &k2[0], &kpi[0], &bd[0], &S[0], k4)
            for i in range(n):
                tmp[i] = yp[i] + (hh / 2.0) * (k1[i] - 3.0 * k3[i] + 4.0 * k4[i])
            status |= deriv(tmp, t + hh, &P, rows, K, &b_right[0], &b_left[0],
                            &c2[0], &k2[0], &kpi[0], &bd[0], &S[0], k5)
            if status != 0:
                break
            finite = True
            for i in range(n):
                ynew[i] = yp[i] + (hh / 6.0) * (k1[i] + 4.0 * k4[i] + k5[i])
                if not isfinite(ynew[i]):
                    finite = False
            if not finite:
                status = -2
                break
            if not adaptive:
                for i in range(n):
                    yp[i] = ynew[i]
                t = t_end if clipped else t + hh
                accepted += 1
                continue
            err_norm = 0.0
            for i in range(n):
                e = (hh / 30.0) * fabs(2.0 * k1[i] - 9.0 * k3[i] + 8.0 * k4[i] - k5[i])
                sc = atol + rtol * (fabs(yp[i]) if fabs(yp[i]) > fabs(ynew[i]) else fabs(ynew[i]))
                if e / sc > err_norm:
                    err_norm = e / sc
            if err_norm == 0.0:
                factor = MAX_FACTOR
            else:
                factor = SAFETY * pow(err_norm, -0.2)
                if factor > MAX_FACTOR:
                    factor = MAX_FACTOR
                if factor < MIN_FACTOR:
                    factor = MIN_FACTOR
            if err_norm <= 1.0:
                for i in range(n):
                    yp[i] = ynew[i]
                t = t_end if clipped else t + hh
                accepted += 1
                h_new = hh * factor
                if clipped and h > h_new:
                    h_new = h
            else:
                rejected += 1
                h_new = hh * factor
            h = h_new if h_new < h_max else h_max
            if h < h_min:
                status = -3
                break
    if status == -1:
        raise NonFiniteState(f"cavity collapsed near t={t}")
    if status == -2:
        raise NonFiniteState(f"non-finite state at t={t}")
    if status == -3:
        raise StepSizeUnderflow(f"step size {h:.3e} below minimum at t={t}")
    return t, (h if adaptive else fixed_step), accepted, rejected
