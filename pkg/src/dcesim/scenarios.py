"""Scenario definitions, presets, config parsing and the run pipeline.

A scenario is described by a flat ``section -> key -> value`` mapping whose
values may be arithmetic expressions.  Expressions see ``pi``, ``sqrt``,
``sin``, ``cos``, ``w(k)`` (static frequency of mode ``k`` for the
scenario's cavity) and, outside the ``cavity`` and ``motion`` sections,
``eps``, ``Omega`` (the drive of the moving wall, right wall first),
``t_max`` and ``dt`` (the sampling interval).
"""

from __future__ import annotations

import ast
import configparser
import copy
import math
import operator
import time
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .bogoliubov import ParticleAccumulator, ParticleSeries
from .cavity import CavityConfig, WallMotion
from .evolve import (
    IntegrationStats,
    IntegratorSettings,
    initial_ensemble,
    integrate,
    wronskian,
)
from .observables import FitError, FitResult, fit_exponential, fit_power

__all__ = [
    "ConfigError",
    "FitSpec",
    "PRESETS",
    "RunRecord",
    "Scenario",
    "SWEEP_PARAMS",
    "evaluate",
    "load_config",
    "preset",
    "preset_scenarios",
    "run_scenario",
]


class ConfigError(ValueError):
    """Invalid scenario description."""


# --- expressions -------------------------------------------------------------

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}


def evaluate(expr, names: Mapping[str, Any] | None = None):
    """Evaluate a numeric expression or a comma-separated tuple of them."""
    if isinstance(expr, (int, float)):
        return expr
    if isinstance(expr, (tuple, list)):
        return tuple(evaluate(e, names) for e in expr)
    env = {"pi": math.pi, "sqrt": math.sqrt, "sin": math.sin, "cos": math.cos, "inf": math.inf}
    env.update(names or {})

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return node.value
        if isinstance(node, ast.Tuple):
            return tuple(ev(e) for e in node.elts)
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            return _UNARY[type(node.op)](ev(node.operand))
        if isinstance(node, ast.Name):
            if node.id in env:
                return env[node.id]
            hint = " (undefined while both walls are static)" if node.id in ("eps", "Omega") else ""
            raise ConfigError(f"undefined name {node.id!r} in {expr!r}{hint}")
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and not node.keywords:
            fn = env.get(node.func.id)
            if callable(fn):
                return fn(*(ev(a) for a in node.args))
        raise ConfigError(f"unsupported expression element in {expr!r}: {ast.dump(node)[:60]}")

    try:
        tree = ast.parse(str(expr).strip(), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse {expr!r}") from exc
    try:
        return ev(tree)
    except (ZeroDivisionError, OverflowError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"cannot evaluate {expr!r}: {exc}") from exc


# --- scenario ----------------------------------------------------------------

@dataclass(frozen=True)
class FitSpec:
    """A requested fit: ``quantity`` in {B2, N, E}, window in units of ``t``."""

    label: str
    quantity: str
    mode: int | None
    model: str
    window: tuple[float, float]


_CAVITY_KEYS = {"L0", "M", "cutoff", "cutoff_m"}
_MOTION_KEYS = {"amp_L", "eps_L", "omega_L", "phi_L", "amp_R", "eps_R", "omega_R",
                "phi_R", "t_F", "ramp"}
_INTEGRATOR_KEYS = {"abs_tol", "rel_tol", "dt_init", "dt_max", "dt_min", "fixed_step",
                    "t_max", "sample_every", "backend"}
_SCENARIO_KEYS = {"name", "modes", "outputs", "continuity", "basis", "description"}
_FIT_KEYS = {"quantity", "mode", "model", "window"}
_SECTIONS = {"scenario": _SCENARIO_KEYS, "cavity": _CAVITY_KEYS, "motion": _MOTION_KEYS,
             "integrator": _INTEGRATOR_KEYS}

SWEEP_PARAMS = {
    "phi_R": ("motion", "phi_R"),
    "phi_L": ("motion", "phi_L"),
    "M": ("cavity", "M"),
    "eps": None,
    "Omega_R": ("motion", "omega_R"),
    "Omega_L": ("motion", "omega_L"),
    "Lambda": ("cavity", "cutoff"),
}


@dataclass(frozen=True)
class Scenario:
    """A fully resolved run description plus the raw mapping it came from."""

    name: str
    cavity: CavityConfig
    motion: WallMotion
    integrator: IntegratorSettings
    modes: tuple[int, ...]
    outputs: tuple[str, ...]
    fits: tuple[FitSpec, ...]
    continuity: str = "momentum"
    basis: str = "initial"
    description: str = ""
    raw: Mapping[str, Mapping[str, Any]] = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def from_mapping(cls, raw: Mapping[str, Mapping[str, Any]]) -> "Scenario":
        raw = {sec: dict(vals) for sec, vals in raw.items()}
        for sec, vals in raw.items():
            allowed = _FIT_KEYS if sec.startswith("fit:") else _SECTIONS.get(sec)
            if allowed is None:
                raise ConfigError(f"unknown section [{sec}]")
            unknown = set(vals) - allowed
            if unknown:
                raise ConfigError(f"unknown key(s) in [{sec}]: {', '.join(sorted(unknown))}")
        meta = raw.get("scenario", {})
        try:
            cav_vals = {k: evaluate(v) for k, v in raw.get("cavity", {}).items()}
            cavity = CavityConfig(**cav_vals)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[cavity]: {exc}") from exc
        names = {"w": cavity.omega}
        try:
            mot_vals = {k: evaluate(v, names) for k, v in raw.get("motion", {}).items()}
            motion = WallMotion(**mot_vals)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[motion]: {exc}") from exc
        if not motion.is_static:
            # static walls leave eps/Omega unbound so dependent expressions fail clearly
            names["eps"] = motion.eps_R if motion.eps_R else motion.eps_L
            names["Omega"] = motion.omega_R if motion.eps_R else motion.omega_L
        integ = dict(raw.get("integrator", {}))
        try:
            backend = integ.pop("backend", None)
            vals = {}
            for k in ("t_max",):
                if k in integ:
                    vals[k] = evaluate(integ.pop(k), names)
            names["t_max"] = vals.get("t_max", IntegratorSettings.t_max)
            vals.update({k: evaluate(v, names) for k, v in integ.items()})
            settings = IntegratorSettings(backend=backend or None, **vals)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[integrator]: {exc}") from exc
        names["dt"] = settings.sample_every
        modes = tuple(int(m) for m in _as_list(meta.get("modes", "1")))
        if any(m < 1 or m > cavity.cutoff_m for m in modes):
            raise ConfigError(f"modes {modes} outside 1..{cavity.cutoff_m}")
        outputs = tuple(_as_list(meta.get("outputs", "B2,N,E")))
        if set(outputs) - {"B2", "N", "E"}:
            raise ConfigError(f"outputs must be among B2, N, E; got {outputs}")
        fits = []
        # static walls create nothing to fit, and eps-scaled windows are undefined
        fit_sections = [] if motion.is_static else sorted(s for s in raw if s.startswith("fit:"))
        for sec in fit_sections:
            vals = raw[sec]
            try:
                window = evaluate(vals["window"], names)
                spec = FitSpec(
                    label=sec[4:],
                    quantity=str(vals.get("quantity", "B2")),
                    mode=int(vals["mode"]) if vals.get("mode") not in (None, "") else None,
                    model=str(vals.get("model", "exponential")),
                    window=(float(window[0]), float(window[1])),
                )
            except (KeyError, TypeError, IndexError) as exc:
                raise ConfigError(f"[{sec}]: {exc}") from exc
            if spec.model not in ("power", "exponential") or spec.quantity not in ("B2", "N", "E"):
                raise ConfigError(f"[{sec}]: bad model or quantity")
            if spec.quantity != "E" and (spec.mode is None or not 1 <= spec.mode <= cavity.cutoff_m):
                raise ConfigError(f"[{sec}]: mode must be within 1..{cavity.cutoff_m}")
            fits.append(spec)
        continuity = str(meta.get("continuity", "momentum"))
        if continuity not in ("momentum", "velocity"):
            raise ConfigError("continuity must be 'momentum' or 'velocity'")
        basis = str(meta.get("basis", "initial"))
        if basis not in ("initial", "instantaneous"):
            raise ConfigError("basis must be 'initial' or 'instantaneous'")
        return cls(
            name=str(meta.get("name", "custom")),
            cavity=cavity,
            motion=motion,
            integrator=settings,
            modes=modes,
            outputs=outputs,
            fits=tuple(fits),
            continuity=continuity,
            basis=basis,
            description=str(meta.get("description", "")),
            raw=raw,
        )

    def with_overrides(self, overrides: Mapping[str, Any], name: str | None = None) -> "Scenario":
        """Rebuild with ``section.key`` (or unambiguous bare ``key``) overrides."""
        raw = copy.deepcopy({s: dict(v) for s, v in self.raw.items()})
        for key, value in overrides.items():
            sec, k = _locate(key)
            raw.setdefault(sec, {})[k] = value
        if name is not None:
            raw.setdefault("scenario", {})["name"] = name
        return Scenario.from_mapping(raw)

    def with_param(self, param: str, value, name: str | None = None) -> "Scenario":
        """Set one sweep parameter (see ``SWEEP_PARAMS``)."""
        if param not in SWEEP_PARAMS:
            raise ConfigError(f"cannot sweep {param!r}; choose from {', '.join(SWEEP_PARAMS)}")
        if param == "eps":
            mot = self.raw.get("motion", {})
            keys = [k for k in ("eps_R", "eps_L") if evaluate(mot.get(k, 0.0)) != 0.0] or ["eps_R"]
            return self.with_overrides({f"motion.{k}": value for k in keys}, name)
        sec, key = SWEEP_PARAMS[param]
        return self.with_overrides({f"{sec}.{key}": value}, name)

    def with_cutoff(self, cutoff: int) -> "Scenario":
        return self.with_overrides({"cavity.cutoff": int(cutoff), "cavity.cutoff_m": int(cutoff)},
                                   name=f"{self.name}_L{int(cutoff)}")


def _as_list(value) -> list[str]:
    if isinstance(value, (list, tuple)):
        return [str(v).strip() for v in value]
    return [v.strip() for v in str(value).split(",") if v.strip()]


def _locate(key: str) -> tuple[str, str]:
    if "." in key:
        sec, k = key.split(".", 1)
        return sec, k
    hits = [sec for sec, keys in _SECTIONS.items() if key in keys]
    if len(hits) != 1:
        raise ConfigError(f"unknown or ambiguous key {key!r}; use section.key")
    return hits[0], key


def load_config(path) -> Scenario:
    """Read an INI file with [scenario], [cavity], [motion], [integrator], [fit:*]."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    raw = {sec: dict(parser.items(sec)) for sec in parser.sections()}
    return Scenario.from_mapping(raw)


# --- presets -------------------------------------------------------------------

def _one_wall(eps, M=0.0, omega="2*w(1)"):
    return {"cavity": {"M": M, "cutoff": 10},
            "motion": {"eps_R": eps, "omega_R": omega, "phi_R": 0.0}}


def _two_walls(eps, omega, phi_R, phi_L=0.0, M=0.0):
    return {"cavity": {"M": M, "cutoff": 10},
            "motion": {"eps_R": eps, "eps_L": eps, "omega_R": omega, "omega_L": omega,
                       "phi_R": phi_R, "phi_L": phi_L}}


def _regime_fits(quantity="B2", mode=1):
    # windows in units of 1/(eps Omega)
    return {
        "fit:quadratic": {"quantity": quantity, "mode": mode, "model": "power",
                          "window": "0, 0.1/(eps*Omega)"},
        "fit:linear": {"quantity": quantity, "mode": mode, "model": "power",
                       "window": "0.5/(eps*Omega), 1.5/(eps*Omega)"},
        "fit:exponential": {"quantity": quantity, "mode": mode, "model": "exponential",
                            "window": "3/(eps*Omega), t_max"},
    }


def _merge(*parts):
    out: dict[str, dict] = {}
    for part in parts:
        for sec, vals in part.items():
            out.setdefault(sec, {}).update(vals)
    return out


# sinh argument in units of the driven mode's frequency w(1)
_SINH_T = "2*w(1)/(pi**2*eps)"

PRESETS: dict[str, dict] = {
    "fig1a": {
        "description": "3D one wall, Omega = 2 w1, eps = 0.001, Lambda = 10, M in {1, 5, 10}",
        "variants": {"M1": {"cavity.M": 1.0}, "M5": {"cavity.M": 5.0}, "M10": {"cavity.M": 10.0}},
        "raw": _merge(_one_wall(0.001, M=10.0), {
            "scenario": {"modes": "1", "outputs": "B2,N"},
            "integrator": {"t_max": "2.8*" + _SINH_T, "sample_every": "t_max/1400",
                           "abs_tol": 1e-10, "rel_tol": 1e-10},
            "fit:onset": {"quantity": "N", "mode": 1, "model": "power",
                          "window": "0, 0.25*" + _SINH_T},
            "fit:late": {"quantity": "N", "mode": 1, "model": "exponential",
                         "window": "2*" + _SINH_T + ", t_max"},
        }),
    },
    "fig1b": {
        "description": "one wall, Omega = 2 w1, eps = 0.001, Lambda = 10, M in {0.01, 0.05, 1}",
        "variants": {"M0.01": {"cavity.M": 0.01}, "M0.05": {"cavity.M": 0.05},
                     "M1": {"cavity.M": 1.0}},
        "raw": _merge(_one_wall(0.001, M=1.0), {
            "scenario": {"modes": "1", "outputs": "B2,N"},
            "integrator": {"t_max": 3000.0, "sample_every": 2.5},
        }),
    },
    "fig2a": {
        "description": "1D one wall, Omega = 2 w1, eps = 0.01, Lambda = 10",
        "raw": _merge(_one_wall(0.01), _regime_fits(), {
            "scenario": {"modes": "1", "outputs": "B2,N,E"},
            "integrator": {"t_max": "6/(eps*Omega)", "sample_every": "t_max/3000"},
        }),
    },
    "fig2b": {
        "description": "1D one wall, Omega = 2 w1, eps = 0.001, Lambda = 10",
        "raw": _merge(_one_wall(0.001), _regime_fits(), {
            "scenario": {"modes": "1", "outputs": "B2,N,E"},
            "integrator": {"t_max": "6/(eps*Omega)", "sample_every": "t_max/3000"},
        }),
    },
    "fig3": {
        "description": "1D one wall energy, Omega = 2 w1, eps = 0.001, Lambda = 10",
        "raw": _merge(_one_wall(0.001), {
            "scenario": {"modes": "1", "outputs": "B2,N,E"},
            "integrator": {"t_max": "1/(eps*Omega)", "sample_every": "t_max/1000"},
            "fit:energy": {"quantity": "E", "model": "power", "window": "0, 0.1/(eps*Omega)"},
        }),
    },
    "fig4": {
        "description": "1D one wall, Omega = 2 w1, eps = 0.01, Lambda in {10, 50, 100}",
        "variants": {"L10": {"cavity.cutoff": 10}, "L50": {"cavity.cutoff": 50},
                     "L100": {"cavity.cutoff": 100}},
        "raw": _merge(_one_wall(0.01), {
            "scenario": {"modes": "1,2", "outputs": "B2,N"},
            "integrator": {"t_max": "6/(eps*Omega)", "sample_every": "t_max/1200"},
            "fit:late": {"quantity": "B2", "mode": 1, "model": "exponential",
                         "window": "3/(eps*Omega), t_max"},
        }),
    },
    "fig5a": {
        "description": "two walls, Omega = w5, phi_R = pi, eps = 0.01, Lambda = 10",
        "raw": _merge(_two_walls(0.01, "w(5)", "pi"), {
            "scenario": {"modes": "3,5,7", "outputs": "B2,N,E"},
            "integrator": {"t_max": "200/Omega", "sample_every": "t_max/2000"},
            **{f"fit:B{k}": {"quantity": "B2", "mode": k, "model": "exponential",
                             "window": "t_max/10, t_max"} for k in (3, 5, 7)},
        }),
    },
    "fig5b": {
        "description": "two walls, Omega = w4, phi_R = 0, eps = 0.01, Lambda = 10",
        "raw": _merge(_two_walls(0.01, "w(4)", 0.0), {
            "scenario": {"modes": "3,4,5", "outputs": "B2,N,E"},
            "integrator": {"t_max": "200/Omega", "sample_every": "t_max/2000"},
            **{f"fit:B{k}": {"quantity": "B2", "mode": k, "model": "exponential",
                             "window": "t_max/10, t_max"} for k in (3, 4, 5)},
        }),
    },
    "fig6": {
        "description": "two walls, Omega = w5, eps = 0.01, Lambda = 10, dephasing sweep",
        "variants": {
            "phiL0_phiR0": {"motion.phi_L": 0.0, "motion.phi_R": 0.0},
            "phiL0.25pi_phiR0.25pi": {"motion.phi_L": "pi/4", "motion.phi_R": "pi/4"},
            "phiR0.25pi": {"motion.phi_R": "pi/4"},
            "phiR0.35pi": {"motion.phi_R": "0.35*pi"},
            "phiR0.5pi": {"motion.phi_R": "pi/2"},
        },
        "raw": _merge(_two_walls(0.01, "w(5)", "pi/4"), {
            "scenario": {"modes": "3", "outputs": "B2,N"},
            "integrator": {"t_max": "600/Omega", "sample_every": "t_max/2000"},
            "fit:B3": {"quantity": "B2", "mode": 3, "model": "exponential",
                       "window": "t_max/2, t_max"},
        }),
    },
    "fig7": {
        "description": "breathing mode, Omega = w4, phi_L = 0, phi_R = pi, eps = 0.01, Lambda = 10",
        "raw": _merge(_two_walls(0.01, "w(4)", "pi"), {
            "scenario": {"modes": "1,2,3,4,6", "outputs": "B2,N,E"},
            "integrator": {"t_max": "600/Omega", "sample_every": "t_max/2000"},
            "fit:energy": {"quantity": "E", "model": "exponential", "window": "t_max/2, t_max"},
        }),
    },
    "fig8": {
        "description": "3D two walls, Omega = w5, phi_L = phi_R = 0, eps = 0.01, Lambda = 10, "
                       "M in {0.01, 1, 5}",
        "variants": {"M0.01": {"cavity.M": 0.01}, "M1": {"cavity.M": 1.0}, "M5": {"cavity.M": 5.0}},
        "raw": _merge(_two_walls(0.01, "w(5)", 0.0, M=1.0), {
            "scenario": {"modes": "1", "outputs": "B2,N,E"},
            "integrator": {"t_max": 60.0, "sample_every": 0.05},
        }),
    },
    "shaker": {
        "description": "translational mode, Omega = w2 + w3, phi_L = phi_R = 0, Lambda = 10",
        "variants": {"M10": {"cavity.M": 10.0, "motion.eps_R": 0.01, "motion.eps_L": 0.01},
                     "M50": {"cavity.M": 50.0, "motion.eps_R": 0.001, "motion.eps_L": 0.001}},
        "raw": _merge(_two_walls(0.01, "w(2) + w(3)", 0.0, M=10.0), {
            "scenario": {"modes": "1,2,3,5,8", "outputs": "B2,N,E"},
            "integrator": {"t_max": "6/(eps*Omega)", "sample_every": "t_max/2000"},
            **{f"fit:N{k}": {"quantity": "N", "mode": k, "model": "exponential",
                             "window": "t_max/2, t_max"} for k in (2, 3)},
        }),
    },
}


def preset(name: str, variant: str | None = None) -> Scenario:
    """Scenario for a preset; multi-variant presets need ``variant`` unless it has one."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    entry = PRESETS[name]
    raw = copy.deepcopy(entry["raw"])
    raw.setdefault("scenario", {}).setdefault("name", name)
    raw["scenario"].setdefault("description", entry["description"])
    base = Scenario.from_mapping(raw)
    variants = entry.get("variants")
    if variant is None:
        return base
    if not variants or variant not in variants:
        raise ConfigError(f"preset {name!r} has no variant {variant!r}")
    return base.with_overrides(variants[variant], name=f"{name}_{variant}")


def preset_scenarios(name: str) -> list[Scenario]:
    """All runs a preset stands for (one per variant)."""
    variants = PRESETS.get(name, {}).get("variants")
    if not variants:
        return [preset(name)]
    return [preset(name, v) for v in variants]


# --- pipeline --------------------------------------------------------------------

@dataclass
class RunRecord:
    """Everything a run produces."""

    scenario: Scenario
    particles: ParticleSeries
    fits: list[tuple[FitSpec, FitResult | str]]
    wronskian_drift: float
    stats: IntegrationStats
    runtime: float

    def series(self, quantity: str, mode: int | None = None) -> np.ndarray:
        if quantity == "E":
            return self.particles.E
        return self.particles.mode(mode, quantity)

    def columns(self, quantity: str) -> dict[str, np.ndarray]:
        """CSV columns for one quantity (``t`` excluded)."""
        if quantity == "E":
            return {"E": self.particles.E}
        return {f"{quantity}[{k}]": self.particles.mode(k, quantity) for k in self.scenario.modes}

    @property
    def unitarity_drift(self) -> float:
        return self.particles.unitarity_drift


def _fit(record: RunRecord, spec: FitSpec) -> FitResult | str:
    fn = fit_power if spec.model == "power" else fit_exponential
    try:
        return fn(record.particles.t, record.series(spec.quantity, spec.mode), spec.window)
    except FitError as exc:
        return str(exc)


def run_scenario(scenario: Scenario, backend: str | None = None) -> RunRecord:
    """Evolve, extract at every sample and evaluate the requested fits."""
    cfg, motion = scenario.cavity, scenario.motion
    settings = scenario.integrator
    if backend is not None:
        settings = IntegratorSettings(**{**settings.__dict__, "backend": backend})
    acc = ParticleAccumulator(cfg, motion, scenario.basis)
    w_drift = 0.0

    def sink(t, ens):
        nonlocal w_drift
        w = wronskian(ens, motion, cfg)
        w_drift = max(w_drift, float(np.max(np.abs(w + 0.5))) / 0.5)
        acc.add(t, ens)

    stats = IntegrationStats()
    start = time.perf_counter()
    integrate(initial_ensemble(cfg, motion, scenario.continuity), motion, cfg, settings,
              sink=sink, stats=stats)
    particles = acc.result()
    record = RunRecord(scenario, particles, [], w_drift, stats, 0.0)
    record.fits = [(spec, _fit(record, spec)) for spec in scenario.fits]
    record.runtime = time.perf_counter() - start
    return record
