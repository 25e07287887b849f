"""Closed-form predictions used as independent test oracles.

Nothing here imports the integration engine.  Frequencies follow the
Dirichlet spectrum ``w_k = sqrt((k pi / L0)^2 + M^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

__all__ = [
    "GalerkinProjection",
    "MsaPrediction",
    "ScalingPrediction",
    "destructive_predicate",
    "galerkin_coefficients",
    "msa_coefficients",
    "msa_prediction",
    "pair_drive_strength",
    "short_time_law",
    "sinh_law",
    "sinh_rate",
    "translational_rate",
]


def _omega(k, L0: float, M: float):
    return np.sqrt((np.asarray(k, dtype=float) * math.pi / L0) ** 2 + M * M)


# --- single-mode resonance ---------------------------------------------------

def sinh_law(n: int, eps: float, Omega: float, L0: float, t):
    """Particle number ``sinh^2(n^2 pi^2 eps t / (2 Omega L0^2))``.

    For a resonantly driven 3D cavity the rate that matches the mode
    equations is obtained with ``Omega`` set to the driven mode's own
    frequency ``w_n`` (half the drive frequency).
    """
    x = n * n * math.pi**2 * eps * np.asarray(t, dtype=float) / (2.0 * Omega * L0 * L0)
    return np.sinh(x) ** 2


def sinh_rate(n: int, eps: float, Omega: float, L0: float = 1.0) -> float:
    """Asymptotic exponential rate of :func:`sinh_law`, ``n^2 pi^2 |eps| / (Omega L0^2)``."""
    return n * n * math.pi**2 * abs(eps) / (Omega * L0 * L0)


# --- multiple scale analysis ---------------------------------------------------

def msa_coefficients(n: int, m: int, L0: float, Omega: float) -> tuple[float, float]:
    """First-order coefficients ``(b1, g1)`` of a rigidly shaken cavity.

    Both carry the factor ``(-1)^(n+m) - 1`` and vanish for even ``n + m``.
    """
    if n == m:
        raise ValueError("n and m must differ")
    parity = (-1.0) ** (n + m) - 1.0
    ratio = n * m / (n * n - m * m)
    return 4.0 * ratio * parity, -ratio * 8.0 * L0 * Omega**2 * parity


def _msa_matrix(n, m, Omega, A0, L0, M, tol):
    """Slow-time generator for ``(A_n, B_n, A_m, B_m)``.

    Keeps the terms of the secular-free amplitude equations whose
    frequency-matching condition holds to within ``tol``.
    """
    idx = (n, m)
    w = {k: float(_omega(k, L0, M)) for k in idx}
    hit = lambda x: 1.0 if abs(x) < tol else 0.0
    G = np.zeros((4, 4))
    for i, a in enumerate(idx):
        wa = w[a]
        for j, c in enumerate(idx):
            if a == c:
                continue
            wc = w[c]
            bt, gt = msa_coefficients(a, c, L0, Omega)
            kb = A0 * Omega * wc * bt / (4.0 * L0 * wa)
            kg = A0 * gt / (16.0 * L0 * L0 * wa)
            d_pm = hit(Omega + wc - wa)
            d_mp = hit(Omega - wc + wa)
            d_mm = hit(Omega - wc - wa)
            d_pp = hit(Omega + wc + wa)
            # dA_a/dtau
            G[2 * i, 2 * j] += kb * (d_pm + d_mp) - kg * (d_pm - d_mp)
            G[2 * i, 2 * j + 1] += -kb * (d_mm + d_pp) - kg * (d_mm - d_pp)
            # dB_a/dtau
            G[2 * i + 1, 2 * j] += -kb * (d_pp + d_mm) + kg * (d_pp - d_mm)
            G[2 * i + 1, 2 * j + 1] += kb * (d_mp + d_pm) + kg * (d_mp - d_pm)
    return G


@dataclass(frozen=True)
class MsaPrediction:
    """Resonant pair, amplitude growth rate on the slow time and coefficients."""

    resonant_pair: tuple[int, int]
    gamma: float
    coefficients: tuple[float, float]


def msa_prediction(n: int, m: int, A0: float = 1.0, L0: float = 1.0, M: float = 0.0,
                   Omega: float | None = None, tol: float = 1e-9) -> MsaPrediction:
    """Growth rate of the pair ``(n, m)`` from the 4x4 slow-time system.

    ``Omega`` defaults to the sum resonance ``w_n + w_m``.  The returned
    ``gamma`` is the largest real part among the eigenvalues; amplitudes
    grow as ``exp(gamma eps t)`` and particle numbers at twice that.
    """
    if Omega is None:
        Omega = float(_omega(n, L0, M) + _omega(m, L0, M))
    G = _msa_matrix(n, m, Omega, A0, L0, M, tol)
    gamma = float(np.max(np.linalg.eigvals(G).real))
    return MsaPrediction((n, m), max(gamma, 0.0), msa_coefficients(n, m, L0, Omega))


def translational_rate(n: int, m: int, A0: float = 1.0, L0: float = 1.0, M: float = 0.0) -> float:
    """Rate ``Gamma`` for the shaker mode driven at ``w_n + w_m``.

    For ``(2, 3)`` this is ``(6 A0 / 5 L0) (w_3^2 - w_2^2) / sqrt(w_2 w_3)``;
    other pairs come from diagonalising the slow-time system.

    Raises
    ------
    ValueError
        If ``n + m`` is even (no first-order parametric coupling).
    """
    if (n + m) % 2 == 0:
        raise ValueError(f"n + m = {n + m} is even: the pair is not parametrically coupled")
    if {n, m} == {2, 3}:
        w2, w3 = _omega(2, L0, M), _omega(3, L0, M)
        return float(6.0 * A0 / (5.0 * L0) * (w3**2 - w2**2) / math.sqrt(w2 * w3))
    return msa_prediction(n, m, A0, L0, M).gamma


# --- two-wall interference -----------------------------------------------------

def _wrap(phi: float) -> float:
    return math.remainder(phi, 2.0 * math.pi)


def destructive_predicate(n: int, phi_R: float, atol: float = 1e-9) -> bool:
    """Whether equal-amplitude driving at ``w_n`` creates no particles.

    True for even ``n`` with ``phi_R = 0`` and odd ``n`` with ``phi_R = pi``
    (``phi_L = 0``), plus the quarter-period case ``n = 5``,
    ``phi_R = pi/2``.  See :func:`pair_drive_strength` for the first-order
    coupling, which does not vanish in that last case.
    """
    phi = _wrap(phi_R)
    if n % 2 == 0 and abs(phi) < atol:
        return True
    if n % 2 == 1 and abs(abs(phi) - math.pi) < atol:
        return True
    return n == 5 and abs(phi - math.pi / 2) < atol


def pair_drive_strength(n: int, phi_R: float, phi_L: float = 0.0) -> float:
    """First-order drive of mode pairs with ``k +- j = n`` in a 1D cavity.

    Both walls oscillate at ``w_n`` with equal amplitude; the coupling of
    such a pair is proportional to ``|(-1)^n exp(i phi_R) - exp(i phi_L)|``
    (1 for either wall alone, between 0 and 2 for both).
    """
    return abs((-1) ** n * complex(math.cos(phi_R), math.sin(phi_R))
               - complex(math.cos(phi_L), math.sin(phi_L)))


# --- 1D short-time scalings ------------------------------------------------------

@dataclass(frozen=True)
class ScalingPrediction:
    """Expected growth regime; ``window`` is in units of ``t``."""

    regime: str
    exponent: float | None
    window: tuple[float, float]


def short_time_law(regime: Literal["quadratic", "linear"] | None, n: int, eps: float,
                   Omega: float, t: float | None = None) -> ScalingPrediction:
    """Power-law regime of mode ``n`` in a 1D cavity driven at ``2 w_n``.

    Quadratic growth for ``Omega t <= 0.1/eps``, linear for
    ``Omega t in [0.5/eps, 1.5/eps]`` and exponential beyond ``3/eps``.
    With ``regime=None`` the regime containing ``t`` is returned.
    """
    if eps == 0:
        raise ValueError("eps must be non-zero")
    scale = 1.0 / (abs(eps) * Omega)
    table = {
        "quadratic": (2.0, (0.0, 0.1 * scale)),
        "linear": (1.0, (0.5 * scale, 1.5 * scale)),
        "exponential": (None, (3.0 * scale, math.inf)),
    }
    if regime is None:
        if t is None:
            raise ValueError("need t or regime")
        x = Omega * t * abs(eps)
        regime = "quadratic" if x <= 0.1 else "linear" if x <= 1.5 else "exponential"
    if regime not in table:
        raise ValueError(f"unknown regime {regime!r}")
    exponent, window = table[regime]
    return ScalingPrediction(regime, exponent, window)


# --- brute-force projection ------------------------------------------------------

@dataclass(frozen=True)
class GalerkinProjection:
    """Coefficient families obtained by direct quadrature of the basis."""

    b: float
    g: float
    r: float  # r1 + r2


def _trajectory(amp, eps, omega, phi, offset):
    def x(t):
        return offset + amp * eps * (np.sin(omega * t + phi) - np.sin(phi))
    return x


def galerkin_coefficients(m: int, s: int, t: float, *, L0: float = 1.0,
                          right: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0),
                          left: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0),
                          nodes: int = 96, dt: float = 1e-3) -> GalerkinProjection:
    """Project the time derivative of the instantaneous basis numerically.

    ``right``/``left`` are ``(amp, eps, omega, phi)``.  With
    ``G_ms = int phi_m d_t phi_s`` and ``P_ms = int d_t phi_m d_t phi_s``:
    ``b = 2 d G``, ``g = -4 d^2 dG/dt`` and ``r1 + r2 = 4 d^2 P``.  Time
    derivatives of the basis use complex-step differentiation, the time
    derivative of ``G`` a fourth-order central difference.
    """
    R = _trajectory(*right, L0)
    L = _trajectory(*left, 0.0)
    xg, wg = np.polynomial.legendre.leggauss(nodes)

    def basis(k, x, tt):
        d = R(tt) - L(tt)
        return np.sqrt(2.0 / d) * np.sin(k * np.pi * (x - L(tt)) / d)

    def dbasis(k, x, tt, h=1e-20):
        return basis(k, x, tt + 1j * h).imag / h

    def projections(tt):
        lo, hi = L(tt), R(tt)
        x = 0.5 * (hi - lo) * xg + 0.5 * (hi + lo)
        w = 0.5 * (hi - lo) * wg
        G = np.sum(w * basis(m, x, tt) * dbasis(s, x, tt))
        P = np.sum(w * dbasis(m, x, tt) * dbasis(s, x, tt))
        return G, P

    d = R(t) - L(t)
    G, P = projections(t)
    Gs = [projections(t + k * dt)[0] for k in (-2, -1, 1, 2)]
    Gdot = (Gs[0] - 8.0 * Gs[1] + 8.0 * Gs[2] - Gs[3]) / (12.0 * dt)
    return GalerkinProjection(b=2.0 * d * G, g=-4.0 * d * d * Gdot, r=4.0 * d * d * P)

