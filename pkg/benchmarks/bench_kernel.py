"""Compare the compiled and numpy integration kernels.

Runs the same one-wall resonant scenario with both backends at a few
cutoffs, reports wall time per unit of simulated time and the largest
difference between the final states.

    python3 benchmarks/bench_kernel.py --cutoffs 5 10 20 --t-max 5
"""

import argparse
import time

import numpy as np

from dcesim import CavityConfig, WallMotion
from dcesim.evolve import IntegratorSettings, initial_ensemble, integrate


def run(cutoff: int, t_max: float, backend: str):
    cfg = CavityConfig(cutoff=cutoff, cutoff_m=cutoff)
    motion = WallMotion(eps_R=0.01, omega_R=2 * cfg.omega(1))
    settings = IntegratorSettings(t_max=t_max, sample_every=t_max, backend=backend)
    start = time.perf_counter()
    ens = integrate(initial_ensemble(cfg, motion), motion, cfg, settings)
    return time.perf_counter() - start, ens


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--cutoffs", type=int, nargs="+", default=[5, 10, 20])
    parser.add_argument("--t-max", type=float, default=5.0)
    args = parser.parse_args(argv)
    print(f"{'cutoff':>6} {'cython s/t':>12} {'python s/t':>12} {'speedup':>8} {'max |diff|':>11}")
    for cutoff in args.cutoffs:
        tc, ec = run(cutoff, args.t_max, "cython")
        tp, ep = run(cutoff, args.t_max, "python")
        diff = max(np.max(np.abs(ec.Q - ep.Q)), np.max(np.abs(ec.U - ep.U)))
        print(f"{cutoff:>6} {tc / args.t_max:>12.4f} {tp / args.t_max:>12.4f} "
              f"{tp / tc:>8.1f} {diff:>11.2e}")


if __name__ == "__main__":
    main()
