"""Bogoliubov coefficients and particle numbers from evolved mode functions.

For every initial mode ``n`` and basis mode ``k`` the amplitude and its
canonical momentum ``P = U + Q G^T`` are split into positive and negative
frequency parts,

    a = (Q + i P / w_k) / 2,   b = (Q - i P / w_k) / 2,

and normalised as ``A = sqrt(2 w_k) a``, ``B = sqrt(2 w_k) b``.  With the
walls at rest ``P = U``, and ``A`` is a diagonal of phases, ``B = 0`` for
the vacuum.  Using ``P`` rather than ``U`` makes
``sum_k (|A_nk|^2 - |B_nk|^2) = 1`` exact under the mode equations even
while the walls move.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Literal

import numpy as np

from .cavity import CavityConfig, WallMotion, mode_frequency, static_frequencies, wall_kinematics
from .evolve import ModeEnsemble, velocity_coupling

__all__ = [
    "BogoliubovMatrix",
    "ExtractionError",
    "ParticleAccumulator",
    "ParticleSeries",
    "extract",
    "particle_number_series",
    "synthesize",
]

Basis = Literal["initial", "instantaneous"]


class ExtractionError(ValueError):
    """Extraction requested while the walls move, without ``diagnostic``."""


@dataclass(frozen=True)
class BogoliubovMatrix:
    """Coefficients ``A[n, k]``, ``B[n, k]`` at time ``t``.

    Row ``n`` is the initial (in) mode, column ``k`` the out mode.
    """

    t: float
    A: np.ndarray
    B: np.ndarray
    omega_out: np.ndarray
    diagnostic: bool = False

    @property
    def N(self) -> np.ndarray:
        """Particle number per out mode, ``sum_n |B_nk|^2``."""
        return np.sum(np.abs(self.B) ** 2, axis=0)

    @property
    def mode_resolved(self) -> np.ndarray:
        """``|B_kk|^2``: particles in mode ``k`` seeded by the vacuum of mode ``k``."""
        m = min(self.B.shape)
        return np.abs(self.B[np.arange(m), np.arange(m)]) ** 2

    def unitarity(self) -> np.ndarray:
        """Per-row ``sum_k (|A_nk|^2 - |B_nk|^2)``; equals 1 exactly."""
        return np.sum(np.abs(self.A) ** 2 - np.abs(self.B) ** 2, axis=1)


def _out_frequencies(cfg: CavityConfig, motion: WallMotion | None, t: float,
                     size: int, basis: Basis) -> np.ndarray:
    k = np.arange(1, size + 1)
    if basis not in ("initial", "instantaneous"):
        raise ValueError(f"unknown basis {basis!r}")
    if motion is None or motion.is_static:
        return static_frequencies(cfg, size)
    if basis == "initial" and motion.moving_at(t):
        return static_frequencies(cfg, size)
    # walls at rest (possibly displaced after stopping) or instantaneous basis
    kin = wall_kinematics(motion, cfg, t)
    return mode_frequency(cfg, kin.L, kin.R, k)


def extract(ensemble: ModeEnsemble, cfg: CavityConfig, motion: WallMotion | None = None,
            diagnostic: bool = False, basis: Basis = "initial") -> BogoliubovMatrix:
    """Project an ensemble onto positive/negative frequency out-modes.

    Parameters
    ----------
    ensemble : ModeEnsemble
        Evolved amplitudes at time ``ensemble.t``.
    cfg : CavityConfig
    motion : WallMotion, optional
        Wall trajectories; needed for the momentum correction and to decide
        whether the walls are at rest.  ``None`` means static walls.
    diagnostic : bool
        Allow extraction while the walls move (instantaneous particle
        number).  Without it, extraction during motion raises.
    basis : {'initial', 'instantaneous'}
        Out-mode frequencies used while the walls move: those of the
        initial cavity, ``w_k(0)`` (default), or those of the current
        length.  Once the walls stop, both use the final cavity length.
        Unitarity holds for either choice.

    Raises
    ------
    ExtractionError
        If the walls are moving at ``ensemble.t`` and ``diagnostic`` is false.
    """
    t = ensemble.t
    moving = motion is not None and motion.moving_at(t) and t > 0
    if moving and not diagnostic:
        raise ExtractionError(
            f"walls are moving at t={t}; pass diagnostic=True for the instantaneous number"
        )
    size = ensemble.Q.shape[1]
    w = _out_frequencies(cfg, motion, t, size, basis)
    G = velocity_coupling(motion, cfg, t, size)
    P = ensemble.U + ensemble.Q @ G.T
    root = np.sqrt(2.0 * w)
    A = 0.5 * root * (ensemble.Q + 1j * P / w)
    B = 0.5 * root * (ensemble.Q - 1j * P / w)
    return BogoliubovMatrix(t, A, B, w, diagnostic=moving)


def synthesize(A: np.ndarray, B: np.ndarray, cfg: CavityConfig, t: float = 0.0) -> ModeEnsemble:
    """Static-wall ensemble whose extraction returns ``(A, B)``."""
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    w = static_frequencies(cfg, A.shape[1])
    root = np.sqrt(2.0 * w)
    Q = (A + B) / root
    U = -1j * w * (A - B) / root
    return ModeEnsemble(t, Q, U)


@dataclass
class ParticleSeries:
    """Sampled particle content.

    ``B2[i, k]`` is ``|B_kk|^2`` and ``N[i, k]`` the summed number at
    ``t[i]``; ``E[i] = sum_k w_k N[i, k]`` with the out-mode frequencies of
    that sample.
    """

    t: np.ndarray
    B2: np.ndarray
    N: np.ndarray
    E: np.ndarray
    omega_out: np.ndarray
    unitarity_drift: float

    def mode(self, k: int, quantity: str = "B2") -> np.ndarray:
        """Series of mode ``k`` (1-based)."""
        return getattr(self, quantity)[:, k - 1]


class ParticleAccumulator:
    """Streaming extraction; feed ``add(t, ensemble)`` from an integration sink."""

    def __init__(self, cfg: CavityConfig, motion: WallMotion | None = None,
                 basis: Basis = "initial"):
        self.cfg, self.motion, self.basis = cfg, motion, basis
        self._t, self._b2, self._n, self._e = [], [], [], []
        self._drift = 0.0
        self._size = None

    def add(self, t: float, ensemble: ModeEnsemble) -> BogoliubovMatrix:
        bog = extract(ensemble, self.cfg, self.motion, diagnostic=True, basis=self.basis)
        self._t.append(t)
        self._b2.append(bog.mode_resolved)
        self._n.append(bog.N)
        self._e.append(float(bog.omega_out @ bog.N))
        self._drift = max(self._drift, float(np.max(np.abs(bog.unitarity() - 1.0))))
        self._size = len(bog.omega_out)
        return bog

    def result(self) -> ParticleSeries:
        if not self._t:
            raise ValueError("no samples")
        return ParticleSeries(np.array(self._t), np.array(self._b2), np.array(self._n),
                              np.array(self._e), static_frequencies(self.cfg, self._size),
                              self._drift)


def particle_number_series(samples: Iterable[tuple[float, ModeEnsemble]], cfg: CavityConfig,
                           motion: WallMotion | None = None,
                           basis: Basis = "initial") -> ParticleSeries:
    """Extract every sample, treating in-motion samples as diagnostics."""
    acc = ParticleAccumulator(cfg, motion, basis)
    for t, ens in samples:
        acc.add(t, ens)
    return acc.result()
