"""Energy, growth-law fits and cutoff convergence."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .bogoliubov import BogoliubovMatrix

__all__ = [
    "ConvergenceReport",
    "FitError",
    "FitResult",
    "cutoff_convergence",
    "energy",
    "fit_exponential",
    "fit_power",
    "first_divergence",
]

MIN_SAMPLES = 8


class FitError(ValueError):
    """Too few samples or non-positive data in a fit window."""


def energy(bogoliubov: BogoliubovMatrix) -> float:
    """Vacuum-subtracted energy ``sum_k w_k N_k`` in units of ``1/L0``."""
    return float(bogoliubov.omega_out @ bogoliubov.N)


@dataclass(frozen=True)
class FitResult:
    """Least-squares fit in the log domain.

    ``exponent_or_rate`` is ``p`` for ``y = a t^p`` or ``r`` for
    ``y = a exp(r t)``; ``residual`` is the RMS of the log residuals.
    """

    model: Literal["power", "exponential"]
    exponent_or_rate: float
    amplitude: float
    window: tuple[float, float]
    residual: float
    samples: int


def _select(t, y, window, positive_t):
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.shape != y.shape:
        raise ValueError("t and y must have the same shape")
    lo, hi = (t.min(), t.max()) if window is None else window
    mask = (t >= lo) & (t <= hi)
    if positive_t:
        # log t is undefined at the origin
        mask &= t > 0
    if mask.sum() < MIN_SAMPLES:
        raise FitError(f"need at least {MIN_SAMPLES} samples in [{lo}, {hi}], got {mask.sum()}")
    if np.any(y[mask] <= 0) or not np.all(np.isfinite(y[mask])):
        raise FitError("log-domain fit needs positive finite data in the window")
    return t[mask], y[mask], (float(lo), float(hi))


def _linear_fit(x, ly):
    slope, intercept = np.polyfit(x, ly, 1)
    resid = ly - (slope * x + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(resid**2)))


def fit_power(t, y, window: tuple[float, float] | None = None) -> FitResult:
    """Fit ``y = a t^p`` by least squares on ``log y`` versus ``log t``.

    Samples at ``t <= 0`` are skipped.
    """
    ts, ys, win = _select(t, y, window, positive_t=True)
    p, c, res = _linear_fit(np.log(ts), np.log(ys))
    return FitResult("power", p, float(np.exp(c)), win, res, len(ts))


def fit_exponential(t, y, window: tuple[float, float] | None = None) -> FitResult:
    """Fit ``y = a exp(r t)`` by least squares on ``log y`` versus ``t``."""
    ts, ys, win = _select(t, y, window, positive_t=False)
    r, c, res = _linear_fit(ts, np.log(ys))
    return FitResult("exponential", r, float(np.exp(c)), win, res, len(ts))


def first_divergence(t, a, b, threshold: float = 0.01, floor: float = 0.0) -> float | None:
    """First time at which ``|a - b| > threshold * max(|b|, floor)``."""
    a, b = np.asarray(a), np.asarray(b)
    bad = np.abs(a - b) > threshold * np.maximum(np.abs(b), floor)
    idx = np.flatnonzero(bad)
    return None if idx.size == 0 else float(np.asarray(t)[idx[0]])


@dataclass
class ConvergenceReport:
    """Mode-resolved series per cutoff and where they separate.

    ``divergence_time[c]`` compares cutoff ``c`` with the largest cutoff.
    """

    cutoffs: list[int]
    t: np.ndarray
    series: dict[int, np.ndarray]
    divergence_time: dict[int, float | None]
    mode: int


def cutoff_convergence(scenario, cutoffs: Sequence[int], mode: int = 1,
                       threshold: float = 0.01, floor: float = 0.0) -> ConvergenceReport:
    """Run ``scenario`` at each cutoff and compare ``|B_mode|^2`` series.

    Cutoffs are run in ascending order; all runs share the sample grid.
    """
    from .scenarios import run_scenario

    cutoffs = sorted(int(c) for c in cutoffs)
    if len(cutoffs) < 2:
        raise ValueError("need at least two cutoffs")
    series, t = {}, None
    for lam in cutoffs:
        record = run_scenario(scenario.with_cutoff(lam))
        t = record.particles.t
        series[lam] = record.particles.mode(mode, "B2")
    ref = series[cutoffs[-1]]
    div = {lam: first_divergence(t, series[lam], ref, threshold, floor) for lam in cutoffs[:-1]}
    return ConvergenceReport(cutoffs, t, series, div, mode)
