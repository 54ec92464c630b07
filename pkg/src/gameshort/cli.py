"""Command-line experiment runner.

Usage::

    gameshort <experiment> [--config FILE] [--steps N[,N...]] [--grid M]
              [--x X ...] [--out DIR] [--seed S]

The config file is flat ``key = value`` text (``#`` comments allowed);
command-line options override file values.  Recognized keys:

    s0, kappa, theta, horizon   -- market model (defaults 1, 1, 1, 1)
    steps                       -- comma-separated step counts (default 25,50,100,200)
    grid                        -- wealth grid points (default 201)
    x                           -- comma-separated capitals (default depends on experiment)
    lambdas                     -- comma-separated multipliers (dual_curve only)
    seed                        -- PRNG seed for Monte Carlo confirmations
    out                         -- output directory

Exit code is 0 iff every in-run check passes.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .experiments import EXPERIMENTS, ExperimentConfig, run_experiment
from .market import ModelParams

_MODEL_KEYS = ("s0", "kappa", "theta", "horizon")
_KNOWN_KEYS = _MODEL_KEYS + ("steps", "grid", "x", "lambdas", "seed", "out")


def load_config(path) -> dict:
    """Parse a flat key=value config file into a string dict."""
    out = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise ValueError(
                f"{path}:{lineno}: unknown key {key!r}; known keys: {', '.join(_KNOWN_KEYS)}"
            )
        out[key] = value
    return out


def _float_list(text: str):
    return tuple(float(tok) for tok in text.replace(",", " ").split())


def _int_list(text: str):
    return tuple(int(tok) for tok in text.replace(",", " ").split())


def build_config(experiment: str, args: argparse.Namespace) -> ExperimentConfig:
    raw = load_config(args.config) if args.config else {}

    model = ModelParams(
        s0=float(raw.get("s0", 1.0)),
        kappa=float(raw.get("kappa", 1.0)),
        theta=float(raw.get("theta", 1.0)),
        horizon=float(raw.get("horizon", 1.0)),
    )
    steps = _int_list(raw["steps"]) if "steps" in raw else (25, 50, 100, 200)
    if args.steps is not None:
        steps = tuple(args.steps)
    grid = int(raw.get("grid", 201))
    if args.grid is not None:
        grid = args.grid
    x_values = _float_list(raw["x"]) if "x" in raw else None
    if args.x is not None:
        x_values = tuple(args.x)
    lambdas = _float_list(raw["lambdas"]) if "lambdas" in raw else None
    seed = int(raw.get("seed", 20260826))
    if args.seed is not None:
        seed = args.seed
    out = Path(raw.get("out", "gameshort-out"))
    if args.out is not None:
        out = Path(args.out)

    return ExperimentConfig(
        experiment=experiment,
        model=model,
        steps=steps,
        wealth_grid_points=grid,
        x_values=x_values,
        lambda_grid=lambdas,
        seed=seed,
        output_dir=out,
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gameshort",
        description="Shortfall-risk experiments for cancellable claims on a "
                    "binomial lattice.",
    )
    sub = parser.add_subparsers(dest="experiment", required=True, metavar="experiment")
    descriptions = {
        "line_check": "tabulate minimal risk against the line 1 - 2x",
        "dual_curve": "dual stopping value F(lambda); flat at 1 beyond lambda = 2",
        "convergence": "gaps under nested action-time refinement plus MC modulus",
        "nonattainment": "best risk within each restricted cancellation class",
        "oracle_suite": "randomized DP-vs-enumeration equivalence battery",
        "price": "perfect-hedging prices of benchmark and constant claims",
    }
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=descriptions[name])
        p.add_argument("--config", metavar="FILE", default=None,
                       help="flat key=value config file")
        p.add_argument("--steps", metavar="N", type=int, nargs="+", default=None,
                       help="step count(s); the largest fixes the lattice "
                            "(default 25 50 100 200)")
        p.add_argument("--grid", metavar="M", type=int, default=None,
                       help="wealth grid points per node (default 201)")
        p.add_argument("--x", metavar="X", type=float, nargs="+", default=None,
                       help="initial capitals (default 0, nu/2, 0.9*nu)")
        p.add_argument("--out", metavar="DIR", default=None,
                       help="output directory (default gameshort-out)")
        p.add_argument("--seed", metavar="S", type=int, default=None,
                       help="PRNG seed for Monte Carlo confirmations "
                            "(default 20260826)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = build_config(args.experiment, args)
        report = run_experiment(cfg)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for check in report.checks:
        status = "PASS" if check.passed else "FAIL"
        print(f"[{status}] {check.name}: measured {check.measured:.6g} "
              f"{check.comparison} {check.threshold:.6g}")
    print(f"summary: {report.summary_path}")
    for kind, paths in (("table", report.tables), ("plot", report.plots)):
        for label, path in paths.items():
            print(f"  {kind} {label}: {path}")
    return 0 if report.all_passed else 1


if __name__ == "__main__":
    sys.exit(main())
