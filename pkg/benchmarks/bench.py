#!/usr/bin/env python3
"""Timing comparison between the numba kernels and the pure-numpy fallback.

Run with the default environment to exercise the jit path, or set
BICONS_DISABLE_NUMBA=1 to force the fallback.  `--both` re-runs the script
in a subprocess with the flag set and prints the two tables side by side.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from bicons import _kernels, backend
from bicons.geometry import GluedMetric, random_geodesic_probes
from bicons.gluing import build_glued_profile
from bicons.profile import solve_profile


def _time(fn, repeats=5):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_batch_eval(gp, sizes=(1_000, 100_000, 1_000_000)):
    rows = []
    args = gp._kernel_args()
    for n in sizes:
        rhos = np.linspace(gp.lattice.rho_minus - 3.0,
                           gp.lattice.rho_minus + 3.0, n)
        if _kernels.HAS_NUMBA:
            out = np.empty((4, n))
            _kernels.eval_F_batch(rhos, *args, out)  # warm the jit cache
            t = _time(lambda: _kernels.eval_F_batch(rhos, *args, out))
        else:
            t = _time(lambda: _kernels.eval_F_batch_numpy(rhos, *args))
        rows.append((f"profile batch n={n:>9,}", t, n / t))
    return rows


def bench_geodesics(gm, n=20, length=100.0):
    # warm-up covers jit compilation of the RK45 stepper
    random_geodesic_probes(gm, n=1, length=1.0, seed=0)
    t = _time(lambda: random_geodesic_probes(gm, n=n, length=length, seed=0),
              repeats=3)
    return [(f"geodesic probes n={n} L={length:g}", t, n / t)]


def run(eps, C):
    sol = solve_profile(eps, C, coverage=12.0 if eps == 1 else 40.0)
    gp = build_glued_profile(sol)
    gm = GluedMetric(gp)
    rows = bench_batch_eval(gp) + bench_geodesics(gm)
    print(f"backend: {backend()}")
    print(f"{'case':<32} {'best [s]':>10} {'throughput [1/s]':>18}")
    for name, t, rate in rows:
        print(f"{name:<32} {t:>10.4f} {rate:>18,.0f}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps", type=int, default=1, choices=(-1, 0, 1))
    ap.add_argument("--C", type=float, default=None)
    ap.add_argument("--both", action="store_true",
                    help="also run the numpy fallback in a subprocess")
    args = ap.parse_args(argv)
    C = args.C if args.C is not None else {1: 3.0, 0: 1.0, -1: 0.0}[args.eps]

    run(args.eps, C)
    if args.both and _kernels.HAS_NUMBA:
        print(flush=True)
        env = dict(os.environ, BICONS_DISABLE_NUMBA="1")
        cmd = [sys.executable, __file__, "--eps", str(args.eps), "--C", str(C)]
        subprocess.run(cmd, env=env, check=True)


if __name__ == "__main__":
    main()
