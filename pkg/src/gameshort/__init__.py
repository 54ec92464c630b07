"""Shortfall-risk minimization for cancellable (game) claims on a binomial lattice.

Submodules
----------
market      binomial discretization, state-price density, node tables
envelopes   piecewise-linear functions, convex envelopes, gap randomization
dynkin      stopping games: values, rules, perfect-hedging price
kernels     hot backward-induction kernels (numba with numpy fallback)
shortfall   wealth-grid dynamic programming, budgeted transfers, hedge plans
duality     dual stopping value F(lambda), lower bounds, the threshold nu
oracles     exhaustive-enumeration reference implementations
experiments config-driven experiment runner (CSV, SVG, summary JSON)
cli         the ``gameshort`` command
"""

from .market import Lattice, LatticeError, ModelParams, build_lattice, terminal_distribution
from .envelopes import (
    GapIntervals,
    PiecewiseLinearFn,
    concave_envelope,
    convex_envelope,
    gap_intervals,
    randomize_to_envelope,
)
from .dynkin import GamePayoff, StoppingRule, game_price_Q, optimal_stop_inf, shortfall_game_value
from .shortfall import (
    GridSpec,
    PlanError,
    PlanNode,
    RiskSolution,
    ValueSurface,
    risk_of_plan,
    solve_shortfall,
    transfer_optimize,
)
from .duality import DualCurve, compute_F, compute_nu, dual_curve, left_derivative_F, lower_bound_R
from .experiments import ExperimentConfig, ExperimentReport, run_experiment
from .kernels import backend_name

__version__ = "1.0.0"

__all__ = [
    "Lattice", "LatticeError", "ModelParams", "build_lattice", "terminal_distribution",
    "GapIntervals", "PiecewiseLinearFn", "concave_envelope", "convex_envelope",
    "gap_intervals", "randomize_to_envelope",
    "GamePayoff", "StoppingRule", "game_price_Q", "optimal_stop_inf", "shortfall_game_value",
    "GridSpec", "PlanError", "PlanNode", "RiskSolution", "ValueSurface",
    "risk_of_plan", "solve_shortfall", "transfer_optimize",
    "DualCurve", "compute_F", "compute_nu", "dual_curve", "left_derivative_F", "lower_bound_R",
    "ExperimentConfig", "ExperimentReport", "run_experiment",
    "backend_name",
    "__version__",
]
