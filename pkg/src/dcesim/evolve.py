"""Time evolution of the mode amplitudes with an adaptive Kutta-Merson scheme."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Literal

import numpy as np

from . import _backend
from ._pykernel import NonFiniteState, StepSizeUnderflow
from .cavity import (
    CavityConfig,
    WallMotion,
    coupling_matrices,
    static_frequencies,
    wall_kinematics,
)

__all__ = [
    "IntegrationError",
    "IntegratorSettings",
    "ModeEnsemble",
    "NonFiniteState",
    "StepSizeUnderflow",
    "initial_ensemble",
    "integrate",
    "load_checkpoint",
    "rhs",
    "save_checkpoint",
    "velocity_coupling",
    "wronskian",
]

IntegrationError = (StepSizeUnderflow, NonFiniteState)


@dataclass
class ModeEnsemble:
    """Complex amplitudes ``Q[n, k]`` and velocities ``U[n, k] = Q'[n, k]``.

    Row ``n`` is the solution that starts as the vacuum of static mode
    ``n + 1``; column ``k`` is the instantaneous basis function ``k + 1``.
    """

    t: float
    Q: np.ndarray
    U: np.ndarray

    def copy(self) -> "ModeEnsemble":
        return ModeEnsemble(self.t, self.Q.copy(), self.U.copy())

    @property
    def shape(self):
        return self.Q.shape


@dataclass(frozen=True)
class IntegratorSettings:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    dt_init: float = 1e-3
    dt_max: float = 0.05
    dt_min: float = 1e-12
    fixed_step: float | None = None
    t_max: float = 10.0
    sample_every: float = 0.1
    backend: str | None = None

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if not 0 < self.dt_init <= self.dt_max:
            raise ValueError("need 0 < dt_init <= dt_max")
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if not self.sample_every > 0:
            raise ValueError("sample_every must be positive")
        if self.fixed_step is not None and not self.fixed_step > 0:
            raise ValueError("fixed_step must be positive")

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def velocity_coupling(motion: WallMotion | None, cfg: CavityConfig, t: float,
                      size: int | None = None) -> np.ndarray:
    """Antisymmetric matrix ``G[m, s] = int phi_m d_t phi_s dx`` at time ``t``.

    The canonical momentum conjugate to ``Q`` is ``P = U + Q G^T``.
    """
    size = size or cfg.cutoff_m
    if motion is None or motion.is_static:
        return np.zeros((size, size))
    kin = wall_kinematics(motion, cfg, t)
    mats = coupling_matrices(size)
    b = kin.Rd * mats.b_right + kin.Ld * mats.b_left
    return b / (2.0 * (kin.R - kin.L))


def initial_ensemble(cfg: CavityConfig, motion: WallMotion | None = None,
                     continuity: Literal["momentum", "velocity"] = "momentum") -> ModeEnsemble:
    """Vacuum state at ``t = 0``.

    ``Q = delta_kn / sqrt(2 w_n)`` and the field velocity projected on the
    basis is ``-i sqrt(w_n / 2) delta_kn``.  If the walls start moving
    abruptly, ``continuity='momentum'`` keeps that projected field velocity
    (the canonical momentum) continuous, so ``U`` absorbs ``-Q G(0+)^T``;
    ``'velocity'`` imposes the vacuum value on ``U`` itself.
    """
    n, k = cfg.cutoff, cfg.cutoff_m
    w = static_frequencies(cfg, max(n, k))
    Q = np.zeros((n, k), dtype=complex)
    U = np.zeros((n, k), dtype=complex)
    m = min(n, k)
    idx = np.arange(m)
    Q[idx, idx] = 1.0 / np.sqrt(2.0 * w[:m])
    U[idx, idx] = -1j * np.sqrt(w[:m] / 2.0)
    if continuity == "momentum" and motion is not None:
        U = U - Q @ velocity_coupling(motion, cfg, 0.0, k).T
    elif continuity not in ("momentum", "velocity"):
        raise ValueError(f"unknown continuity {continuity!r}")
    return ModeEnsemble(0.0, Q, U)


def _pack(ens: ModeEnsemble) -> np.ndarray:
    y = np.empty((2, 2 * ens.Q.shape[0], ens.Q.shape[1]))
    n = ens.Q.shape[0]
    y[0, :n], y[0, n:] = ens.Q.real, ens.Q.imag
    y[1, :n], y[1, n:] = ens.U.real, ens.U.imag
    return y


def _unpack(y: np.ndarray, t: float) -> ModeEnsemble:
    n = y.shape[1] // 2
    return ModeEnsemble(t, y[0, :n] + 1j * y[0, n:], y[1, :n] + 1j * y[1, n:])


def rhs(ensemble: ModeEnsemble, motion: WallMotion, cfg: CavityConfig) -> ModeEnsemble:
    """Time derivative ``(Q', U')`` of the ensemble, returned as an ensemble."""
    from ._pykernel import derivative

    y = _pack(ensemble)
    mats = coupling_matrices(ensemble.Q.shape[1])
    dy = derivative(y, ensemble.t, motion.as_array(cfg.L0), cfg.M, mats)
    return _unpack(dy, ensemble.t)


def wronskian(ensemble: ModeEnsemble, motion: WallMotion | None,
              cfg: CavityConfig) -> np.ndarray:
    """Per-row ``sum_k Im(Q_k^* P_k)`` with ``P`` the canonical momentum.

    Exactly conserved by the mode equations (``-1/2`` for the vacuum rows).
    Coincides with ``sum_k Im(Q_k^* U_k)`` whenever the walls are at rest.
    """
    G = velocity_coupling(motion, cfg, ensemble.t, ensemble.Q.shape[1])
    P = ensemble.U + ensemble.Q @ G.T
    return np.sum(np.imag(np.conj(ensemble.Q) * P), axis=1)


@dataclass
class IntegrationStats:
    accepted: int = 0
    rejected: int = 0
    backend: str = ""
    breakpoints: list = field(default_factory=list)


Sink = Callable[[float, ModeEnsemble], None]


def _sample_times(t0: float, settings: IntegratorSettings) -> np.ndarray:
    step = settings.sample_every
    k0 = math.ceil(t0 / step - 1e-9)
    k1 = math.floor(settings.t_max / step + 1e-9)
    times = [k * step for k in range(k0, k1 + 1) if k * step >= t0]
    if not times or settings.t_max - times[-1] > 1e-9 * step:
        times.append(settings.t_max)
    else:
        times[-1] = min(times[-1], settings.t_max)
    return np.array(times)


def integrate(ensemble0: ModeEnsemble, motion: WallMotion, cfg: CavityConfig,
              settings: IntegratorSettings, sink: Sink | None = None,
              stats: IntegrationStats | None = None) -> ModeEnsemble:
    """Advance ``ensemble0`` to ``settings.t_max``.

    ``sink(t, ensemble)`` receives a snapshot at every multiple of
    ``sample_every`` (and at ``t_max``).  Steps land exactly on sample times
    and on ``t_F``.  When the walls stop abruptly at ``t_F`` the velocity
    ``U`` jumps so that the canonical momentum stays continuous; the
    snapshot emitted at ``t_F`` is the in-motion one.
    """
    kern = _backend.get_kernel(settings.backend)
    if stats is not None:
        stats.backend = "cython" if kern is not _backend._pykernel else "python"
    mats = coupling_matrices(ensemble0.Q.shape[1])
    p = motion.as_array(cfg.L0)
    y = _pack(ensemble0)
    t = float(ensemble0.t)
    h = settings.dt_init
    fixed = settings.fixed_step or 0.0
    t_stop = motion.t_F if (math.isfinite(motion.t_F) and not motion.is_static) else None
    stop_done = t_stop is None or t >= t_stop
    # acceleration kinks at the envelope edges
    kinks = []
    if motion.ramp > 0 and not motion.is_static:
        kinks = [motion.ramp] + ([motion.t_F - motion.ramp] if t_stop else [])
    samples = _sample_times(t, settings)
    targets = sorted(set(samples.tolist()) | {x for x in kinks if t < x < settings.t_max}
                     | ({t_stop} if not stop_done and t_stop < settings.t_max else set()))
    sample_set = set(samples.tolist())
    if sink is not None and t in sample_set:
        sink(t, _unpack(y, t))
    for target in targets:
        if target <= t:
            continue
        t, h, acc, rej = kern.advance(y, t, target, h, p, cfg.M, mats,
                                      settings.abs_tol, settings.rel_tol,
                                      settings.dt_max, settings.dt_min, fixed)
        t = target
        if stats is not None:
            stats.accepted += acc
            stats.rejected += rej
        if sink is not None and target in sample_set:
            sink(t, _unpack(y, t))
        if not stop_done and t == t_stop:
            ens = _unpack(y, t)
            G = velocity_coupling(motion, cfg, t, ens.Q.shape[1])
            ens.U = ens.U + ens.Q @ G.T
            y = _pack(ens)
            stop_done = True
            if stats is not None:
                stats.breakpoints.append(t)
    return _unpack(y, t)


def save_checkpoint(path, ensemble: ModeEnsemble, settings: IntegratorSettings) -> None:
    """Write ``(t, Q, U, settings digest)`` losslessly to an ``.npz`` file."""
    with open(path, "wb") as fh:
        np.savez(fh, t=np.array(ensemble.t), Q=ensemble.Q, U=ensemble.U,
                 settings=np.array(settings.digest()))


def load_checkpoint(path, settings: IntegratorSettings | None = None) -> ModeEnsemble:
    with np.load(path) as data:
        if settings is not None and str(data["settings"]) != settings.digest():
            raise ValueError("checkpoint was written with different integrator settings")
        return ModeEnsemble(float(data["t"]), data["Q"].copy(), data["U"].copy())
