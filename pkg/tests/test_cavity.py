import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dcesim import CavityConfig, WallMotion
from dcesim.cavity import (
    coupling_coefficients,
    coupling_matrices,
    mode_frequency,
    static_frequencies,
    wall_kinematics,
)
from dcesim.oracle import galerkin_coefficients

modes = st.integers(1, 12)
phases = st.floats(0, 2 * math.pi)
times = st.floats(0, 20)


def test_dirichlet_spectrum():
    cfg = CavityConfig(M=10.0)
    assert cfg.omega(1) == pytest.approx(math.sqrt(math.pi**2 + 100))
    assert static_frequencies(CavityConfig(), 3) == pytest.approx(math.pi * np.arange(1, 4))


def test_frequency_follows_length():
    cfg = CavityConfig(L0=2.0)
    assert mode_frequency(cfg, 0.5, 1.5, 2) == pytest.approx(2 * math.pi)


@pytest.mark.parametrize("kwargs", [{"L0": 0}, {"M": -1}, {"cutoff": 0}])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        CavityConfig(**kwargs)


def test_motion_validation():
    with pytest.raises(ValueError):
        WallMotion(t_F=0.0)
    with pytest.raises(ValueError):
        WallMotion(t_F=1.0, ramp=0.6)


@given(eps=st.floats(-0.1, 0.1), omega=st.floats(0.1, 30), phi=phases)
def test_walls_start_at_rest_positions(eps, omega, phi):
    motion = WallMotion(eps_R=eps, omega_R=omega, phi_R=phi, eps_L=eps, omega_L=omega, phi_L=phi)
    kin = wall_kinematics(motion, CavityConfig(), 0.0)
    assert kin.L == pytest.approx(0.0, abs=1e-15)
    assert kin.R == pytest.approx(1.0, abs=1e-15)


def test_walls_stop_after_t_F():
    motion = WallMotion(eps_R=0.1, omega_R=3.0, t_F=2.0)
    kin = wall_kinematics(motion, CavityConfig(), 5.0)
    assert kin.Rd == 0.0 and kin.Rdd == 0.0
    assert not motion.moving_at(5.0) and motion.moving_at(1.0)


@settings(max_examples=50)
@given(m=modes, s=modes, t=times, phi=phases)
def test_velocity_coupling_antisymmetric(m, s, t, phi):
    motion = WallMotion(eps_R=0.05, omega_R=7.0, phi_R=phi, eps_L=0.03, omega_L=5.0)
    cfg = CavityConfig()
    b_ms = coupling_coefficients(motion, cfg, t, m, s).b
    b_sm = coupling_coefficients(motion, cfg, t, s, m).b
    assert b_ms == pytest.approx(-b_sm, abs=1e-12)


@given(m=modes, s=modes)
def test_diagonal_identity(m, s):
    c = coupling_coefficients(WallMotion(eps_R=0.1, omega_R=4.0), CavityConfig(), 0.3, m, s)
    assert c.a == (1.0 if m == s else 0.0)


@settings(max_examples=50)
@given(m=modes, s=modes, t=times)
def test_static_walls_decouple(m, s, t):
    c = coupling_coefficients(WallMotion(), CavityConfig(), t, m, s)
    assert (c.b, c.g, c.r1, c.r2) == (0.0, 0.0, 0.0, 0.0)


@settings(max_examples=30)
@given(m=modes, s=modes, t=times, phi=phases)
def test_matrices_reproduce_pairwise_coefficients(m, s, t, phi):
    motion = WallMotion(eps_R=0.05, omega_R=7.0, phi_R=phi, eps_L=0.03, omega_L=5.0)
    cfg = CavityConfig()
    kin = wall_kinematics(motion, cfg, t)
    mats = coupling_matrices(12)
    b = kin.Rd * mats.b_right + kin.Ld * mats.b_left
    assert b[m - 1, s - 1] == pytest.approx(coupling_coefficients(motion, cfg, t, m, s).b, abs=1e-12)


@pytest.mark.parametrize("m,s,t", [(1, 2, 0.37), (3, 3, 1.1), (2, 5, 2.9), (4, 1, 0.0)])
@pytest.mark.parametrize("side", ["right", "left", "both"])
def test_coefficients_match_galerkin_projection(m, s, t, side):
    wall = (1.0, 0.05, 2 * math.pi, 0.4)
    still = (1.0, 0.0, 0.0, 0.0)
    right = wall if side in ("right", "both") else still
    left = (1.0, 0.03, 3 * math.pi, 1.3) if side in ("left", "both") else still
    motion = WallMotion(eps_R=right[1], omega_R=right[2], phi_R=right[3],
                        eps_L=left[1], omega_L=left[2], phi_L=left[3])
    c = coupling_coefficients(motion, CavityConfig(), t, m, s)
    ref = galerkin_coefficients(m, s, t, right=right, left=left)
    scale = max(abs(ref.b), abs(ref.g), abs(ref.r), 1e-3)
    assert abs(c.b - ref.b) <= 1e-7 * scale
    assert abs(c.g - ref.g) <= 1e-7 * scale
    assert abs(c.r1 + c.r2 - ref.r) <= 1e-7 * scale
