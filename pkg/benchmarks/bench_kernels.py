"""Benchmark the backward-induction kernels: numba backend vs numpy fallback.

The backend is fixed per process by the GAMESHORT_NUMBA environment
variable at import time, so each configuration runs in a subprocess.

Usage: python benchmarks/bench_kernels.py [--steps 50 100 200] [--grid 201]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

_WORKER = r"""
import json, sys, time
import gameshort
from gameshort import ModelParams, build_lattice, solve_shortfall, GridSpec
from gameshort.experiments import counterexample_payoff

steps, grid, repeats = json.loads(sys.argv[1])
results = []
for n in steps:
    lat = build_lattice(ModelParams(s0=1.0, kappa=1.0, theta=1.0, horizon=1.0), n)
    payoff = counterexample_payoff(lat)
    x = 0.03
    solve_shortfall(lat, payoff, x, GridSpec(points=grid))  # warm-up / JIT
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        sol = solve_shortfall(lat, payoff, x, GridSpec(points=grid))
        best = min(best, time.perf_counter() - t0)
    results.append({"steps": n, "seconds": best, "risk": sol.risk})
print(json.dumps({"backend": gameshort.backend_name(), "results": results}))
"""


def run_backend(flag: str, steps, grid: int, repeats: int) -> dict:
    env = dict(os.environ, GAMESHORT_NUMBA=flag)
    out = subprocess.run(
        [sys.executable, "-c", _WORKER, json.dumps([steps, grid, repeats])],
        env=env, capture_output=True, text=True, check=True,
    )
    return json.loads(out.stdout.strip().splitlines()[-1])


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, nargs="+", default=[50, 100, 200])
    parser.add_argument("--grid", type=int, default=201)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    numba_run = run_backend("1", args.steps, args.grid, args.repeats)
    numpy_run = run_backend("0", args.steps, args.grid, args.repeats)
    if numba_run["backend"] != "numba":
        print("note: numba unavailable, both runs used the numpy fallback")

    print(f"{'steps':>6} {'grid':>6} {numba_run['backend']:>12} "
          f"{numpy_run['backend']:>12} {'speedup':>8}  risk agreement")
    ok = True
    for a, b in zip(numba_run["results"], numpy_run["results"]):
        agree = abs(a["risk"] - b["risk"])
        ok = ok and agree <= 1e-9
        print(f"{a['steps']:>6} {args.grid:>6} {a['seconds']:>11.4f}s "
              f"{b['seconds']:>11.4f}s {b['seconds'] / a['seconds']:>7.2f}x  "
              f"|dR|={agree:.2e}")
    if not ok:
        print("FAIL: backends disagree beyond 1e-9")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
