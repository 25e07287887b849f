import math

import numpy as np
import pytest

from dcesim._backend import BACKEND
from dcesim.observables import cutoff_convergence
from dcesim.scenarios import (
    PRESETS,
    ConfigError,
    Scenario,
    evaluate,
    load_config,
    preset,
    preset_scenarios,
    run_scenario,
)

SMALL = {
    "scenario": {"name": "small", "modes": "1,2", "outputs": "B2,N,E"},
    "cavity": {"cutoff": 4},
    "motion": {"eps_R": 0.02, "omega_R": "2*w(1)"},
    "integrator": {"t_max": 3.0, "sample_every": 0.05},
    "fit:growth": {"quantity": "N", "mode": 1, "model": "exponential", "window": "1, t_max"},
}


def test_evaluate():
    assert evaluate("pi/4") == pytest.approx(math.pi / 4)
    assert evaluate("2*w(3)", {"w": lambda k: k}) == 6
    assert evaluate("0, 1/(eps*Omega)", {"eps": 0.5, "Omega": 2}) == (0, 1.0)
    for bad in ("__import__('os')", "x.y", "1 +", "open"):
        with pytest.raises(ConfigError):
            evaluate(bad)


def test_from_mapping_resolves_expressions():
    sc = Scenario.from_mapping(SMALL)
    assert sc.motion.omega_R == pytest.approx(2 * math.pi)
    assert sc.fits[0].window == (1.0, 3.0)
    assert sc.modes == (1, 2)


@pytest.mark.parametrize("patch", [
    {"cavity": {"cutof": 4}},
    {"bogus": {}},
    {"scenario": {"modes": "9"}},
    {"scenario": {"outputs": "B2,X"}},
    {"fit:x": {"quantity": "N", "mode": 1, "model": "cubic", "window": "0, 1"}},
    {"cavity": {"L0": -1}},
])
def test_config_errors(patch):
    raw = {k: dict(v) for k, v in SMALL.items()}
    for sec, vals in patch.items():
        raw.setdefault(sec, {}).update(vals)
    with pytest.raises(ConfigError):
        Scenario.from_mapping(raw)


def test_overrides_and_params():
    sc = Scenario.from_mapping(SMALL)
    assert sc.with_overrides({"phi_R": "pi/2"}).motion.phi_R == pytest.approx(math.pi / 2)
    assert sc.with_param("M", 3.0).cavity.M == 3.0
    assert sc.with_param("eps", 0.05).motion.eps_R == 0.05
    cut = sc.with_cutoff(6)
    assert (cut.cavity.cutoff, cut.cavity.cutoff_m, cut.name) == (6, 6, "small_L6")
    with pytest.raises(ConfigError):
        sc.with_param("colour", 1)


def test_static_motion_drops_fits():
    sc = Scenario.from_mapping(SMALL).with_overrides({"motion.eps_R": 0})
    assert sc.fits == ()


def test_load_config(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(
        "[scenario]\nname = ini\nmodes = 1\n"
        "[cavity]\ncutoff = 3\nM = 2\n"
        "[motion]\neps_R = 0.01\nomega_R = 2*w(1)\nphi_R = 0\n"
        "[integrator]\nt_max = 1\nsample_every = 0.1\n"
    )
    sc = load_config(path)
    assert sc.name == "ini" and sc.cavity.M == 2.0
    assert sc.motion.omega_R == pytest.approx(2 * math.sqrt(math.pi**2 + 4))


# caption parameters of each preset: (Omega, phi_R, phi_L, eps_R, eps_L, M, cutoff)
CAPTIONS = {
    ("fig1a", "M10"): (lambda c: 2 * c.omega(1), 0, 0, 0.001, 0, 10, 10),
    ("fig1b", "M0.05"): (lambda c: 2 * c.omega(1), 0, 0, 0.001, 0, 0.05, 10),
    ("fig2a", None): (lambda c: 2 * math.pi, 0, 0, 0.01, 0, 0, 10),
    ("fig2b", None): (lambda c: 2 * math.pi, 0, 0, 0.001, 0, 0, 10),
    ("fig3", None): (lambda c: 2 * math.pi, 0, 0, 0.001, 0, 0, 10),
    ("fig4", "L50"): (lambda c: 2 * math.pi, 0, 0, 0.01, 0, 0, 50),
    ("fig5a", None): (lambda c: 5 * math.pi, math.pi, 0, 0.01, 0.01, 0, 10),
    ("fig5b", None): (lambda c: 4 * math.pi, 0, 0, 0.01, 0.01, 0, 10),
    ("fig6", "phiR0.35pi"): (lambda c: 5 * math.pi, 0.35 * math.pi, 0, 0.01, 0.01, 0, 10),
    ("fig6", "phiL0.25pi_phiR0.25pi"): (lambda c: 5 * math.pi, math.pi / 4, math.pi / 4,
                                        0.01, 0.01, 0, 10),
    ("fig7", None): (lambda c: 4 * math.pi, math.pi, 0, 0.01, 0.01, 0, 10),
    ("fig8", "M5"): (lambda c: c.omega(5), 0, 0, 0.01, 0.01, 5, 10),
    ("shaker", "M10"): (lambda c: c.omega(2) + c.omega(3), 0, 0, 0.01, 0.01, 10, 10),
}


@pytest.mark.parametrize("key", list(CAPTIONS))
def test_preset_parameters(key):
    sc = preset(*key)
    omega, phi_R, phi_L, eps_R, eps_L, M, cutoff = CAPTIONS[key]
    mot, cav = sc.motion, sc.cavity
    assert mot.omega_R == pytest.approx(omega(cav))
    assert (mot.phi_R, mot.phi_L) == pytest.approx((phi_R, phi_L))
    assert (mot.eps_R, mot.eps_L) == (eps_R, eps_L)
    assert (cav.M, cav.cutoff) == (M, cutoff)
    if eps_L:
        assert mot.omega_L == pytest.approx(mot.omega_R)


def test_every_preset_builds():
    for name in PRESETS:
        assert preset_scenarios(name)
    with pytest.raises(ConfigError):
        preset("fig99")
    with pytest.raises(ConfigError):
        preset("fig1a", "M7")


def test_run_scenario_record():
    rec = run_scenario(Scenario.from_mapping(SMALL))
    assert rec.particles.t[-1] == pytest.approx(3.0)
    assert set(rec.columns("B2")) == {"B2[1]", "B2[2]"}
    assert list(rec.columns("E")) == ["E"]
    assert rec.unitarity_drift < 1e-7 and rec.wronskian_drift < 1e-7
    (spec, fit), = rec.fits
    assert fit.exponent_or_rate > 0


@pytest.mark.skipif(BACKEND != "cython", reason="compiled kernel not built")
def test_backends_give_same_record():
    sc = Scenario.from_mapping(SMALL).with_overrides({"integrator.t_max": 0.5})
    a = run_scenario(sc, "python").particles
    b = run_scenario(sc, "cython").particles
    assert np.max(np.abs(a.N - b.N)) < 1e-12


def test_cutoff_convergence():
    sc = Scenario.from_mapping(SMALL).with_overrides({"integrator.t_max": 1.0})
    rep = cutoff_convergence(sc, [5, 3], mode=1, threshold=0.5, floor=1e-9)
    assert rep.cutoffs == [3, 5]
    assert set(rep.series) == {3, 5}
    assert list(rep.divergence_time) == [3]
