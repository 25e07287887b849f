import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dcesim import CavityConfig, WallMotion
from dcesim._backend import BACKEND, get_kernel
from dcesim.evolve import (
    IntegrationStats,
    IntegratorSettings,
    ModeEnsemble,
    initial_ensemble,
    integrate,
    load_checkpoint,
    rhs,
    save_checkpoint,
    velocity_coupling,
    wronskian,
)

needs_cython = pytest.mark.skipif(BACKEND != "cython", reason="compiled kernel not built")

CFG = CavityConfig(cutoff=6)
RESONANT = WallMotion(eps_R=0.05, omega_R=2 * math.pi)
TWO_WALLS = WallMotion(eps_R=0.03, omega_R=5 * math.pi, phi_R=0.7,
                       eps_L=0.02, omega_L=4 * math.pi, phi_L=0.2)


def test_static_walls_closed_form():
    cfg = CavityConfig(cutoff=5, M=2.0)
    T = 10.0
    out = integrate(initial_ensemble(cfg), WallMotion(), cfg,
                    IntegratorSettings(t_max=T, sample_every=T, abs_tol=1e-12, rel_tol=1e-12))
    w = np.array([cfg.omega(k) for k in range(1, 6)])
    expected = np.diag(np.exp(-1j * w * T) / np.sqrt(2 * w))
    assert np.max(np.abs(out.Q - expected)) < 1e-8
    expected_u = np.diag(-1j * w) @ expected
    assert np.max(np.abs(out.U - expected_u)) < 1e-8 * np.max(np.abs(expected_u))


def test_vacuum_wronskian():
    ens = initial_ensemble(CFG, RESONANT)
    assert wronskian(ens, RESONANT, CFG) == pytest.approx(-0.5 * np.ones(6), abs=1e-15)


def test_velocity_coupling_antisymmetric():
    G = velocity_coupling(TWO_WALLS, CFG, 0.3)
    assert np.allclose(G, -G.T)
    assert not np.any(velocity_coupling(WallMotion(), CFG, 0.3))


def _random_ensemble(seed, t, shape=(6, 6)):
    rng = np.random.default_rng(seed)
    c = lambda: rng.normal(size=shape) + 1j * rng.normal(size=shape)
    return ModeEnsemble(t, c(), c())


@settings(max_examples=30, deadline=None)
@given(a=st.floats(-3, 3), b=st.floats(-3, 3), t=st.floats(0, 5), seed=st.integers(0, 1000))
def test_rhs_is_linear(a, b, t, seed):
    x = _random_ensemble(seed, t)
    y = _random_ensemble(seed + 1, t)
    combo = ModeEnsemble(t, a * x.Q + b * y.Q, a * x.U + b * y.U)
    lhs = rhs(combo, TWO_WALLS, CFG)
    rx, ry = rhs(x, TWO_WALLS, CFG), rhs(y, TWO_WALLS, CFG)
    scale = 1 + np.max(np.abs(lhs.U))
    assert np.max(np.abs(lhs.Q - (a * rx.Q + b * ry.Q))) <= 1e-12 * scale
    assert np.max(np.abs(lhs.U - (a * rx.U + b * ry.U))) <= 1e-12 * scale


@settings(max_examples=10, deadline=None)
@given(eps=st.floats(0.001, 0.05), phi=st.floats(0, 2 * math.pi), T=st.floats(0.5, 3))
def test_wronskian_conserved_during_motion(eps, phi, T):
    motion = WallMotion(eps_R=eps, omega_R=2 * math.pi, phi_R=phi, eps_L=eps, omega_L=3 * math.pi)
    out = integrate(initial_ensemble(CFG, motion), motion, CFG,
                    IntegratorSettings(t_max=T, sample_every=T))
    assert np.max(np.abs(wronskian(out, motion, CFG) + 0.5)) < 1e-7


def test_samples_land_on_grid():
    seen = []
    integrate(initial_ensemble(CFG, RESONANT), RESONANT, CFG,
              IntegratorSettings(t_max=1.0, sample_every=0.25), sink=lambda t, e: seen.append(t))
    assert seen == pytest.approx([0.0, 0.25, 0.5, 0.75, 1.0])


def test_momentum_jump_at_stop():
    motion = RESONANT.with_(t_F=1.3)
    stats = IntegrationStats()
    out = integrate(initial_ensemble(CFG, motion), motion, CFG,
                    IntegratorSettings(t_max=2.0, sample_every=0.5), stats=stats)
    assert stats.breakpoints == [1.3]
    # after the stop the Wronskian is the plain one
    W = np.sum(np.imag(np.conj(out.Q) * out.U), axis=1)
    assert W == pytest.approx(-0.5 * np.ones(6), abs=1e-8)


def test_fixed_step_is_deterministic():
    s = IntegratorSettings(t_max=1.0, sample_every=1.0, fixed_step=1e-3)
    a = integrate(initial_ensemble(CFG, TWO_WALLS), TWO_WALLS, CFG, s)
    b = integrate(initial_ensemble(CFG, TWO_WALLS), TWO_WALLS, CFG, s)
    assert np.array_equal(a.Q, b.Q) and np.array_equal(a.U, b.U)


def test_checkpoint_round_trip(tmp_path):
    s = IntegratorSettings(t_max=0.5, sample_every=0.5)
    mid = integrate(initial_ensemble(CFG, TWO_WALLS), TWO_WALLS, CFG, s)
    path = tmp_path / "state.npz"
    save_checkpoint(path, mid, s)
    back = load_checkpoint(path, s)
    assert back.t == mid.t
    assert np.array_equal(back.Q, mid.Q) and np.array_equal(back.U, mid.U)
    # resuming reproduces a straight run
    s2 = IntegratorSettings(t_max=1.0, sample_every=0.5, fixed_step=1e-3)
    straight = integrate(initial_ensemble(CFG, TWO_WALLS), TWO_WALLS, CFG, s2)
    half = integrate(initial_ensemble(CFG, TWO_WALLS), TWO_WALLS, CFG,
                     IntegratorSettings(t_max=0.5, sample_every=0.5, fixed_step=1e-3))
    save_checkpoint(path, half, s2)
    resumed = integrate(load_checkpoint(path, s2), TWO_WALLS, CFG, s2)
    assert np.max(np.abs(resumed.Q - straight.Q)) < 1e-13


def test_checkpoint_settings_mismatch(tmp_path):
    s = IntegratorSettings(t_max=0.1, sample_every=0.1)
    path = tmp_path / "state.npz"
    save_checkpoint(path, initial_ensemble(CFG), s)
    with pytest.raises(ValueError):
        load_checkpoint(path, IntegratorSettings(t_max=0.1, sample_every=0.1, abs_tol=1e-8))


@pytest.mark.parametrize("kwargs", [{"abs_tol": 0}, {"dt_init": 1.0, "dt_max": 0.1},
                                    {"t_max": -1}, {"sample_every": 0}, {"fixed_step": -1e-3}])
def test_settings_validation(kwargs):
    with pytest.raises(ValueError):
        IntegratorSettings(**kwargs)


def test_step_underflow_is_reported():
    from dcesim.evolve import IntegrationError

    s = IntegratorSettings(t_max=1.0, sample_every=1.0, abs_tol=1e-30, rel_tol=1e-30,
                           dt_init=1e-3, dt_min=1e-4, backend="python")
    with pytest.raises(IntegrationError):
        integrate(initial_ensemble(CFG, RESONANT), RESONANT, CFG, s)


@needs_cython
@pytest.mark.parametrize("fixed", [1e-3, None])
def test_kernels_agree(fixed):
    s = {b: IntegratorSettings(t_max=2.0, sample_every=2.0, fixed_step=fixed, backend=b)
         for b in ("cython", "python")}
    out = {b: integrate(initial_ensemble(CFG, TWO_WALLS), TWO_WALLS, CFG, s[b]) for b in s}
    assert np.max(np.abs(out["cython"].Q - out["python"].Q)) < 1e-12
    assert np.max(np.abs(out["cython"].U - out["python"].U)) < 1e-11


@needs_cython
@settings(max_examples=20, deadline=None)
@given(t=st.floats(0, 5), seed=st.integers(0, 1000))
def test_kernel_derivatives_agree(t, seed):
    from dcesim.cavity import coupling_matrices
    from dcesim.evolve import _pack

    y = _pack(_random_ensemble(seed, t))
    p = TWO_WALLS.as_array(CFG.L0)
    mats = coupling_matrices(6)
    a = get_kernel("python").derivative(y, t, p, 0.7, mats)
    b = get_kernel("cython").derivative(y, t, p, 0.7, mats)
    assert np.max(np.abs(a - b)) <= 1e-12 * (1 + np.max(np.abs(a)))


def test_unknown_backend():
    with pytest.raises(ValueError):
        get_kernel("fortran")


def test_tolerance_halving_converges():
    from dcesim.bogoliubov import extract

    motion = WallMotion(eps_R=0.05, omega_R=2 * math.pi, t_F=4.0)
    b2 = []
    for tol in (1e-8, 5e-9):
        s = IntegratorSettings(t_max=4.0, sample_every=4.0, abs_tol=tol, rel_tol=tol)
        out = integrate(initial_ensemble(CFG, motion), motion, CFG, s)
        b2.append(np.abs(extract(out, CFG, motion).B) ** 2)
    assert np.max(np.abs(b2[0] - b2[1])) < 1e-6 * np.max(b2[1])
