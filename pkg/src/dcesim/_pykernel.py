"""Pure-Python (numpy) Kutta-Merson kernel.

State layout shared with the compiled kernel: a real array ``y`` of shape
``(2, rows, K)`` holding ``Q`` in ``y[0]`` and ``U = Q'`` in ``y[1]``.  Each
row is one real solution of the (real, linear) mode equations; complex
amplitudes are stored as separate real and imaginary rows.
"""

import math

import numpy as np

from .cavity import _displacement, _displacement_at_zero

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0


class StepSizeUnderflow(RuntimeError):
    pass


class NonFiniteState(RuntimeError):
    pass


def kinematics(p, t):
    aL, wL, phL, aR, wR, phR, L0, t_F, ramp = p
    if t == 0.0:
        xl = _displacement_at_zero(aL, wL, phL, ramp)
        xr = _displacement_at_zero(aR, wR, phR, ramp)
    else:
        xl = _displacement(aL, wL, phL, t, t_F, ramp)
        xr = _displacement(aR, wR, phR, t, t_F, ramp)
    return xl[0], L0 + xr[0], xl[1], xr[1], xl[2], xr[2]


def coefficients(p, M, mats, t):
    """Return ``(d, b, S)`` with ``U' = Q S^T - U b^T / d``."""
    L, R, Ld, Rd, Ldd, Rdd = kinematics(p, t)
    d = R - L
    if not d > 0:
        raise NonFiniteState(f"cavity collapsed at t={t}: R - L = {d}")
    dd = Rd - Ld
    w2 = (mats.kpi / d) ** 2 + M * M
    if Ld == 0.0 and Rd == 0.0 and Ldd == 0.0 and Rdd == 0.0:
        return d, None, np.diag(-w2)
    b = Rd * mats.b_right + Ld * mats.b_left
    bdot = Rdd * mats.b_right + Ldd * mats.b_left
    inv4d2 = 0.25 / (d * d)
    S = (dd * mats.c2 * b - 2.0 * d * bdot) * inv4d2
    diag = (dd * dd + mats.k2 * (Rd * Rd + Rd * Ld + Ld * Ld)) * inv4d2 - w2
    S[np.diag_indices_from(S)] += diag
    return d, b, S


def derivative(y, t, p, M, mats, out=None):
    if out is None:
        out = np.empty_like(y)
    d, b, S = coefficients(p, M, mats, t)
    Q, U = y[0], y[1]
    out[0] = U
    np.matmul(Q, S.T, out=out[1])
    if b is not None:
        out[1] -= (U @ b.T) / d
    return out


def advance(y, t, t_end, h, p, M, mats, atol, rtol, h_max, h_min, fixed_step):
    """Advance ``y`` in place from ``t`` to exactly ``t_end``.

    Returns ``(t_end, h_next, accepted, rejected)``.
    """
    k1 = np.empty_like(y)
    k2 = np.empty_like(y)
    k3 = np.empty_like(y)
    k4 = np.empty_like(y)
    k5 = np.empty_like(y)
    accepted = rejected = 0
    adaptive = not fixed_step > 0.0
    if not adaptive:
        h = fixed_step
    while t < t_end:
        remaining = t_end - t
        clipped = h >= remaining
        hh = remaining if clipped else h
        derivative(y, t, p, M, mats, k1)
        derivative(y + (hh / 3.0) * k1, t + hh / 3.0, p, M, mats, k2)
        derivative(y + (hh / 6.0) * (k1 + k2), t + hh / 3.0, p, M, mats, k3)
        derivative(y + (hh / 8.0) * (k1 + 3.0 * k3), t + 0.5 * hh, p, M, mats, k4)
        derivative(y + (hh / 2.0) * (k1 - 3.0 * k3 + 4.0 * k4), t + hh, p, M, mats, k5)
        y_new = y + (hh / 6.0) * (k1 + 4.0 * k4 + k5)
        if not np.isfinite(y_new).all():
            raise NonFiniteState(f"non-finite state at t={t + hh}")
        if not adaptive:
            y[...] = y_new
            t = t_end if clipped else t + hh
            accepted += 1
            continue
        err = (hh / 30.0) * np.abs(2.0 * k1 - 9.0 * k3 + 8.0 * k4 - k5)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = float(np.max(err / scale))
        if err_norm == 0.0:
            factor = MAX_FACTOR
        else:
            factor = min(MAX_FACTOR, max(MIN_FACTOR, SAFETY * err_norm ** -0.2))
        if err_norm <= 1.0:
            y[...] = y_new
            t = t_end if clipped else t + hh
            accepted += 1
            h_new = hh * factor
            if clipped:
                h_new = max(h_new, h)
        else:
            rejected += 1
            h_new = hh * factor
        h = min(h_new, h_max)
        if h < h_min:
            raise StepSizeUnderflow(f"step size {h:.3e} below minimum at t={t}")
    return t, (fixed_step if not adaptive else h), accepted, rejected
