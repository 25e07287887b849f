"""Cavity geometry, wall trajectories and intermode coupling coefficients.

Lengths are measured in units of the static cavity length ``L0`` and
frequencies in ``1/L0`` (``c = 1``).  The field is expanded on the
instantaneous Dirichlet basis

    phi_k(x, t) = sqrt(2/d) sin(k pi (x - L) / d),   d = R(t) - L(t),

and the canonical amplitudes obey

    Q''_m + w_m(t)^2 Q_m = -(1/d) sum_s b_ms Q'_s
                           + 1/(4 d^2) sum_s (g_ms + r1_ms + r2_ms) Q_s

with the coefficient families returned by :func:`coupling_coefficients`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

__all__ = [
    "CavityCollapseError",
    "CavityConfig",
    "Couplings",
    "Kinematics",
    "Side",
    "WallMotion",
    "coupling_coefficients",
    "coupling_matrices",
    "mode_frequency",
    "static_frequencies",
    "wall_acceleration",
    "wall_kinematics",
    "wall_position",
    "wall_velocity",
]


class CavityCollapseError(ValueError):
    """Raised when the right wall reaches or crosses the left wall."""


class Side(str, enum.Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True)
class CavityConfig:
    """Static cavity parameters.

    Parameters
    ----------
    L0 : float
        Static length.  Sets the unit system.
    M : float
        Effective mass, i.e. the transverse wavenumber ``k_parallel`` of a
        3D cavity.  ``M = 0`` is the 1D massless case.
    cutoff : int
        Number of field modes ``Lambda`` (initial-mode index ``n``).
    cutoff_m : int, optional
        Number of canonical variables ``Lambda_m`` (basis index ``k``).
        Defaults to ``cutoff``.
    """

    L0: float = 1.0
    M: float = 0.0
    cutoff: int = 10
    cutoff_m: int | None = None

    def __post_init__(self):
        if self.cutoff_m is None:
            object.__setattr__(self, "cutoff_m", self.cutoff)
        if not self.L0 > 0:
            raise ValueError(f"L0 must be positive, got {self.L0}")
        if not self.M >= 0:
            raise ValueError(f"M must be non-negative, got {self.M}")
        if int(self.cutoff) < 1 or int(self.cutoff_m) < 1:
            raise ValueError("cutoffs must be >= 1")
        object.__setattr__(self, "cutoff", int(self.cutoff))
        object.__setattr__(self, "cutoff_m", int(self.cutoff_m))

    def omega(self, n: int) -> float:
        """Static frequency of mode ``n``."""
        return mode_frequency(self, 0.0, self.L0, n)


@dataclass(frozen=True)
class WallMotion:
    """Prescribed trajectories of both walls.

    The oscillating displacement of each wall is
    ``amp * eps * (sin(omega t + phi) - sin(phi))`` for ``0 <= t <= t_F``, so
    both walls sit exactly at their rest positions (0 and ``L0``) at ``t = 0``.
    A positive ``ramp`` multiplies the displacement by a ``sin^2`` switching
    envelope over ``[0, ramp]`` and ``[t_F - ramp, t_F]``.
    """

    amp_L: float = 1.0
    eps_L: float = 0.0
    omega_L: float = 0.0
    phi_L: float = 0.0
    amp_R: float = 1.0
    eps_R: float = 0.0
    omega_R: float = 0.0
    phi_R: float = 0.0
    t_start: float = 0.0
    t_F: float = math.inf
    ramp: float = 0.0

    def __post_init__(self):
        if self.t_start != 0.0:
            raise ValueError("motion must start at t = 0")
        if not self.t_F > 0:
            raise ValueError(f"t_F must be positive, got {self.t_F}")
        if self.ramp < 0:
            raise ValueError("ramp must be non-negative")
        if math.isfinite(self.t_F) and 2 * self.ramp > self.t_F:
            raise ValueError("ramp windows overlap: need 2*ramp <= t_F")

    @property
    def is_static(self) -> bool:
        return self.amp_L * self.eps_L == 0.0 and self.amp_R * self.eps_R == 0.0

    def moving_at(self, t: float) -> bool:
        return not self.is_static and 0.0 <= t < self.t_F

    def with_(self, **changes) -> "WallMotion":
        return replace(self, **changes)

    def as_array(self, L0: float) -> np.ndarray:
        """Packed parameters consumed by the integration kernels."""
        return np.array(
            [
                self.amp_L * self.eps_L, self.omega_L, self.phi_L,
                self.amp_R * self.eps_R, self.omega_R, self.phi_R,
                L0, self.t_F, self.ramp,
            ],
            dtype=float,
        )


class Kinematics(NamedTuple):
    L: float
    R: float
    Ld: float
    Rd: float
    Ldd: float
    Rdd: float


def _envelope(t: float, t_F: float, ramp: float) -> tuple[float, float, float]:
    # sin^2 switch-on over [0, ramp] times switch-off over [t_F - ramp, t_F]
    if ramp <= 0.0:
        return 1.0, 0.0, 0.0
    f, df, ddf = 1.0, 0.0, 0.0
    k = math.pi / ramp
    if t < ramp:
        u = k * t
        f = math.sin(0.5 * u) ** 2
        df = 0.5 * k * math.sin(u)
        ddf = 0.5 * k * k * math.cos(u)
    if t_F - t < ramp:
        u = k * (t_F - t)
        g = math.sin(0.5 * u) ** 2
        dg = -0.5 * k * math.sin(u)
        ddg = 0.5 * k * k * math.cos(u)
        f, df, ddf = f * g, df * g + f * dg, ddf * g + 2.0 * df * dg + f * ddg
    return f, df, ddf


def _displacement(a, omega, phi, t, t_F, ramp):
    if a == 0.0 or t <= 0.0:
        return 0.0, 0.0, 0.0
    moving = t <= t_F
    if not moving:
        t = t_F
    s = a * (math.sin(omega * t + phi) - math.sin(phi))
    ds = a * omega * math.cos(omega * t + phi)
    dds = -a * omega * omega * math.sin(omega * t + phi)
    f, df, ddf = _envelope(t, t_F, ramp)
    x = f * s
    if not moving:
        return x, 0.0, 0.0
    return x, df * s + f * ds, ddf * s + 2.0 * df * ds + f * dds


def _displacement_at_zero(a, omega, phi, ramp):
    # right limit at t = 0: the displacement vanishes but the velocity need not
    if a == 0.0 or ramp > 0.0:
        return 0.0, 0.0, 0.0
    return 0.0, a * omega * math.cos(phi), -a * omega * omega * math.sin(phi)


def wall_kinematics(motion: WallMotion, cfg: CavityConfig, t: float) -> Kinematics:
    """Positions, velocities and accelerations of both walls at time ``t``.

    Velocities and accelerations vanish for ``t < 0`` and ``t > t_F``; at
    ``t = 0`` and ``t = t_F`` the in-motion (one-sided) values are returned.
    """
    args = (motion.t_F, motion.ramp)
    aL = motion.amp_L * motion.eps_L
    aR = motion.amp_R * motion.eps_R
    if t == 0.0:
        xl = _displacement_at_zero(aL, motion.omega_L, motion.phi_L, motion.ramp)
        xr = _displacement_at_zero(aR, motion.omega_R, motion.phi_R, motion.ramp)
    else:
        xl = _displacement(aL, motion.omega_L, motion.phi_L, t, *args)
        xr = _displacement(aR, motion.omega_R, motion.phi_R, t, *args)
    return Kinematics(xl[0], cfg.L0 + xr[0], xl[1], xr[1], xl[2], xr[2])


def _pick(kin: Kinematics, side, idx):
    side = Side(side)
    return kin[idx] if side is Side.LEFT else kin[idx + 1]


def wall_position(motion: WallMotion, cfg: CavityConfig, side, t: float) -> float:
    return _pick(wall_kinematics(motion, cfg, t), side, 0)


def wall_velocity(motion: WallMotion, cfg: CavityConfig, side, t: float) -> float:
    return _pick(wall_kinematics(motion, cfg, t), side, 2)


def wall_acceleration(motion: WallMotion, cfg: CavityConfig, side, t: float) -> float:
    return _pick(wall_kinematics(motion, cfg, t), side, 4)


def mode_frequency(cfg: CavityConfig, L: float, R: float, n) -> float:
    """Instantaneous frequency ``sqrt((n pi / (R - L))^2 + M^2)``."""
    d = R - L
    if not d > 0:
        raise CavityCollapseError(f"cavity collapsed: R - L = {d}")
    return np.sqrt((np.asarray(n) * math.pi / d) ** 2 + cfg.M**2)


def static_frequencies(cfg: CavityConfig, count: int | None = None) -> np.ndarray:
    k = np.arange(1, (count or cfg.cutoff_m) + 1)
    return mode_frequency(cfg, 0.0, cfg.L0, k)


class Couplings(NamedTuple):
    a: float
    b: float
    g: float
    r1: float
    r2: float


def coupling_coefficients(motion: WallMotion, cfg: CavityConfig, t: float,
                          m: int, s: int) -> Couplings:
    """Coefficient families of the mode equation for the pair ``(m, s)``.

    ``b`` couples to the velocity ``Q'_s`` with prefactor ``-1/d``; ``g``
    (acceleration-bearing part), ``r1`` (terms carrying the left-wall
    velocity) and ``r2`` (the rest) couple to ``Q_s`` with prefactor
    ``1/(4 d^2)``.  ``a`` is the Kronecker delta.
    """
    if m < 1 or s < 1:
        raise ValueError("mode indices start at 1")
    kin = wall_kinematics(motion, cfg, t)
    d = kin.R - kin.L
    dd = kin.Rd - kin.Ld
    if m == s:
        pi2m2 = (math.pi * m) ** 2
        r1 = 4.0 / 3.0 * pi2m2 * kin.Ld * (kin.Rd + kin.Ld)
        r2 = dd * dd + 4.0 / 3.0 * pi2m2 * kin.Rd**2
        return Couplings(1.0, 0.0, 0.0, r1, r2)
    sign = -1.0 if (m + s) % 2 else 1.0
    base = 4.0 * m * s / (m * m - s * s)
    b = base * (kin.Rd * sign - kin.Ld)
    bdot = base * (kin.Rdd * sign - kin.Ldd)
    g = 2.0 * dd * b - 2.0 * d * bdot
    quad = 16.0 * m * s * (m * m + s * s) / (m * m - s * s) ** 2
    r1 = quad * kin.Ld * dd * (sign - 1.0)
    r2 = quad * sign * dd * dd
    return Couplings(0.0, b, g, r1, r2)


@dataclass(frozen=True)
class CouplingMatrices:
    """Time-independent index structure of the coupling matrices.

    ``b = Rd * b_right + Ld * b_left``; the position coupling is
    ``(dd * c2 * b - 2 d * bdot + diag(dd^2 + k2 * (Rd^2 + Rd Ld + Ld^2))) / (4 d^2)``.
    """

    b_right: np.ndarray
    b_left: np.ndarray
    c2: np.ndarray
    k2: np.ndarray
    kpi: np.ndarray = field(repr=False)


def coupling_matrices(size: int) -> CouplingMatrices:
    k = np.arange(1, size + 1, dtype=float)
    m, s = k[:, None], k[None, :]
    off = m != s
    den = np.where(off, m * m - s * s, 1.0)
    sign = np.where((m + s) % 2 == 1, -1.0, 1.0)
    base = np.where(off, 4.0 * m * s / den, 0.0)
    # 2 from the -d/dt of the velocity coupling, 4(m^2+s^2)/(m^2-s^2) from
    # the overlap of the basis time derivatives
    c2 = np.where(off, 2.0 + 4.0 * (m * m + s * s) / den, 0.0)
    return CouplingMatrices(
        b_right=base * sign,
        b_left=-base,
        c2=c2,
        k2=4.0 / 3.0 * (math.pi * k) ** 2,
        kpi=math.pi * k,
    )
