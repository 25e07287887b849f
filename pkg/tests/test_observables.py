import numpy as np
import pytest
from hypothesis import given, strategies as st

from dcesim import CavityConfig
from dcesim.bogoliubov import extract, synthesize
from dcesim.observables import (
    FitError,
    energy,
    first_divergence,
    fit_exponential,
    fit_power,
)


@given(p=st.floats(0.5, 3), a=st.floats(1e-6, 1e3))
def test_power_fit_round_trip(p, a):
    t = np.linspace(0, 10, 50)
    fit = fit_power(t, a * t**p, (0, 10))
    assert fit.exponent_or_rate == pytest.approx(p, rel=1e-9)
    assert fit.amplitude == pytest.approx(a, rel=1e-8)
    assert fit.samples == 49  # t = 0 skipped


@given(r=st.floats(-2, 2), a=st.floats(1e-6, 1e3))
def test_exponential_fit_round_trip(r, a):
    t = np.linspace(0, 5, 40)
    fit = fit_exponential(t, a * np.exp(r * t))
    assert fit.exponent_or_rate == pytest.approx(r, abs=1e-9)
    assert fit.residual < 1e-9


def test_fit_rejects_bad_windows():
    t = np.linspace(0, 1, 20)
    with pytest.raises(FitError):
        fit_power(t, t**2, (0.9, 1.0))
    with pytest.raises(FitError):
        fit_exponential(t, np.zeros_like(t))


def test_first_divergence():
    t = np.arange(5.0)
    assert first_divergence(t, [1, 1, 1, 1.5, 2], [1, 1, 1, 1, 1]) == 3.0
    assert first_divergence(t, np.ones(5), np.ones(5)) is None
    assert first_divergence(t, [0, 1e-9, 0, 0, 0], np.zeros(5), floor=1e-6) is None


def test_energy_weights_by_frequency():
    cfg = CavityConfig(cutoff=2)
    B = np.array([[0.0, 0.3], [0.2, 0.0]], dtype=complex)
    bog = extract(synthesize(np.eye(2), B, cfg), cfg)
    assert energy(bog) == pytest.approx(np.pi * 0.04 + 2 * np.pi * 0.09)
