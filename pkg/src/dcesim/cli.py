"""Command-line front end: run presets or config files, sweep parameters.

Exit codes: 0 success, 2 configuration error, 3 integration failure,
4 filesystem error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

from .evolve import IntegrationError
from .observables import FitResult
from .scenarios import (
    PRESETS,
    SWEEP_PARAMS,
    ConfigError,
    RunRecord,
    Scenario,
    evaluate,
    load_config,
    preset,
    preset_scenarios,
    run_scenario,
)

log = logging.getLogger("dcesim")

OUT_ENV = "DCESIM_OUT"
EXIT_CONFIG, EXIT_INTEGRATION, EXIT_FILESYSTEM = 2, 3, 4

# convenience flags -> scenario keys
_SHORTCUTS = {
    "epsilon_r": "motion.eps_R",
    "epsilon_l": "motion.eps_L",
    "omega_r": "motion.omega_R",
    "omega_l": "motion.omega_L",
    "phi_r": "motion.phi_R",
    "phi_l": "motion.phi_L",
    "mass": "cavity.M",
    "cutoff": "cavity.cutoff",
    "t_max": "integrator.t_max",
}


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_series(record: RunRecord, out_dir: Path) -> list[Path]:
    """One CSV per requested quantity: ``t`` then ``quantity[mode]`` columns."""
    paths = []
    t = record.particles.t
    for quantity in record.scenario.outputs:
        cols = record.columns(quantity)
        path = out_dir / f"{record.scenario.name}_{quantity}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", *cols])
            for i, ti in enumerate(t):
                writer.writerow([_fmt(ti), *(_fmt(c[i]) for c in cols.values())])
        paths.append(path)
    return paths


def fit_report(record: RunRecord) -> str:
    sc = record.scenario
    lines = [
        f"scenario: {sc.name}",
        f"description: {sc.description}" if sc.description else None,
        f"backend: {record.stats.backend}",
        f"runtime_s: {record.runtime:.2f}",
        f"steps: {record.stats.accepted} accepted, {record.stats.rejected} rejected",
        f"unitarity_drift: {record.unitarity_drift:.3e}",
        f"wronskian_drift: {record.wronskian_drift:.3e}",
        "fits:",
    ]
    if not record.fits:
        lines.append("  (none)")
    for spec, fit in record.fits:
        target = "E" if spec.quantity == "E" else f"{spec.quantity}[{spec.mode}]"
        head = f"  {spec.label:<14} {target:<8} {spec.model:<12}"
        if isinstance(fit, FitResult):
            key = "exponent" if fit.model == "power" else "rate"
            lines.append(
                f"{head} window=[{fit.window[0]:.6g}, {fit.window[1]:.6g}] "
                f"{key}={fit.exponent_or_rate:.6g} amplitude={fit.amplitude:.6g} "
                f"residual={fit.residual:.3g} samples={fit.samples}"
            )
        else:
            lines.append(f"{head} failed: {fit}")
    return "\n".join(line for line in lines if line is not None) + "\n"


def write_record(record: RunRecord, out_dir: Path) -> list[Path]:
    paths = write_series(record, out_dir)
    report = out_dir / f"{record.scenario.name}_fits.txt"
    report.write_text(fit_report(record), encoding="utf-8")
    return [*paths, report]


def _parse_sets(items: Sequence[str] | None) -> dict[str, str]:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _overrides(args) -> dict[str, str]:
    over = _parse_sets(args.set)
    for flag, key in _SHORTCUTS.items():
        value = getattr(args, flag, None)
        if value is not None:
            over[key] = value
    if over.get("cavity.cutoff") is not None and "cavity.cutoff_m" not in over:
        over["cavity.cutoff_m"] = over["cavity.cutoff"]
    return over


def _base_scenarios(args) -> list[Scenario]:
    if args.config and args.preset:
        raise ConfigError("give either a preset name or --config, not both")
    if args.config:
        scenarios = [load_config(args.config)]
    elif args.preset:
        if args.variant:
            scenarios = [preset(args.preset, args.variant)]
        else:
            scenarios = preset_scenarios(args.preset)
    else:
        raise ConfigError("a preset name or --config is required")
    over = _overrides(args)
    if over:
        scenarios = [sc.with_overrides(over) for sc in scenarios]
    return scenarios


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get(OUT_ENV, "dcesim_out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _run_all(scenarios: Sequence[Scenario], jobs: int, backend: str | None) -> list[RunRecord]:
    if jobs <= 1 or len(scenarios) == 1:
        return [run_scenario(sc, backend) for sc in scenarios]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        # map keeps submission order, so output is deterministic
        return list(pool.map(run_scenario, scenarios, [backend] * len(scenarios)))


def cmd_run(args) -> int:
    scenarios = _base_scenarios(args)
    out = _out_dir(args)
    for record in _run_all(scenarios, args.jobs, args.backend):
        paths = write_record(record, out)
        log.info("wrote %s", ", ".join(str(p) for p in paths))
        print(f"{record.scenario.name}: {record.runtime:.1f} s, "
              f"unitarity drift {record.unitarity_drift:.1e}; wrote {len(paths)} files to {out}")
    return 0


def cmd_sweep(args) -> int:
    if args.param not in SWEEP_PARAMS:
        raise ConfigError(f"--param must be one of {', '.join(SWEEP_PARAMS)}")
    raw_values = [v.strip() for v in (args.values or "").split(",") if v.strip()]
    if not raw_values:
        raise ConfigError("--values is empty")
    values = [evaluate(v) for v in raw_values]
    bases = _base_scenarios(args)
    if len(bases) != 1:
        raise ConfigError(f"preset {args.preset!r} has several variants; pick one with --variant")
    base = bases[0]
    runs = [base.with_param(args.param, v, name=f"{base.name}_{args.param}{v:.6g}")
            for v in values]
    out = _out_dir(args)
    records = _run_all(runs, args.jobs, args.backend)
    for record in records:
        write_record(record, out)
    path = out / f"{base.name}_sweep_{args.param}.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header = None
        for value, record in zip(values, records):
            cols = {}
            for quantity in record.scenario.outputs:
                cols.update(record.columns(quantity))
            if header is None:
                header = [args.param, "t", *cols]
                writer.writerow(header)
            for i, ti in enumerate(record.particles.t):
                writer.writerow([_fmt(value), _fmt(ti), *(_fmt(c[i]) for c in cols.values())])
    for value, record in zip(raw_values, records):
        print(f"{args.param}={value}: {record.runtime:.1f} s")
    print(f"wrote {path}")
    return 0


def cmd_list(args) -> int:
    for name, entry in PRESETS.items():
        variants = ", ".join(entry.get("variants", {})) or "-"
        print(f"{name:<8} {entry['description']}  [variants: {variants}]")
    return 0


def _add_scenario_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("preset", nargs="?", help="preset name (see list-presets)")
    p.add_argument("--config", help="INI scenario file instead of a preset")
    p.add_argument("--variant", help="run a single variant of a multi-run preset")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./dcesim_out)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a scenario value, e.g. motion.phi_R=pi/4 (repeatable)")
    p.add_argument("--jobs", type=int, default=1, help="parallel runs (process pool)")
    p.add_argument("--backend", choices=["cython", "python"], help="integration kernel")
    g = p.add_argument_group("shortcuts")
    for flag in _SHORTCUTS:
        g.add_argument("--" + flag.replace("_", "-"), dest=flag, metavar="X")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dcesim", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a preset or config file")
    _add_scenario_args(run)
    run.set_defaults(func=cmd_run)
    sweep = sub.add_parser("sweep", help="run one scenario over several parameter values")
    _add_scenario_args(sweep)
    sweep.add_argument("--param", required=True, help=", ".join(SWEEP_PARAMS))
    sweep.add_argument("--values", required=True, help="comma-separated values or expressions")
    sweep.set_defaults(func=cmd_sweep)
    lst = sub.add_parser("list-presets", help="show available presets")
    lst.set_defaults(func=cmd_list)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"dcesim: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationError as exc:
        print(f"dcesim: integration failed: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except OSError as exc:
        print(f"dcesim: filesystem error: {exc}", file=sys.stderr)
        return EXIT_FILESYSTEM


if __name__ == "__main__":
    sys.exit(main())
