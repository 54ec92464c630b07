"""Config-driven experiment runner.

Each experiment writes deterministic CSV tables (12 significant digits),
vector plots (SVG), and a machine-readable ``summary.json`` listing every
check with its measured value, threshold, and pass/fail flag.

The benchmark instance throughout is the cancellable claim

    X at node (k, j) = (1 + sin(pi * t_k)) * max(z(k, j), 1/2),
    Y = 0 before maturity,  Y = X at maturity,

for which the minimal shortfall risk is pinned to the line ``1 - 2x`` for
small initial capital ``x`` and no optimal hedge exists there.  Refining
the action times means fixing the market lattice at the finest step count
and restricting both players' stopping levels to nested subsets; this is
the monotone refinement the theory describes (re-discretizing the market
per step count changes the market itself and breaks monotonicity).
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dynkin import GamePayoff, game_price_Q
from .duality import DualCurve, compute_nu, default_lambda_grid, dual_curve, left_derivative_F
from .envelopes import PiecewiseLinearFn
from .kernels import backend_name
from .market import Lattice, ModelParams, build_lattice, terminal_distribution
from .oracles import game_value_enum, shortfall_value_enum
from .shortfall import GridSpec, solve_shortfall, transfer_optimize

__all__ = [
    "EXPERIMENTS",
    "ExperimentConfig",
    "Check",
    "ExperimentReport",
    "counterexample_X",
    "counterexample_payoff",
    "interior_cancellation_instance",
    "terminal_transfer_risk",
    "nu_monte_carlo",
    "nu_lattice",
    "modulus_reference",
    "random_small_instance",
    "run_line_check",
    "run_dual_curve",
    "run_convergence",
    "run_nonattainment",
    "run_oracle_suite",
    "run_price",
    "run_experiment",
]

EXPERIMENTS = (
    "line_check",
    "dual_curve",
    "convergence",
    "nonattainment",
    "oracle_suite",
    "price",
)

_DEFAULT_MODEL = ModelParams(s0=1.0, kappa=1.0, theta=1.0, horizon=1.0)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything an experiment run needs; unset fields take documented defaults."""

    experiment: str
    model: ModelParams = _DEFAULT_MODEL
    steps: tuple = (25, 50, 100, 200)
    wealth_grid_points: int = 201
    x_values: tuple | None = None
    lambda_grid: tuple | None = None
    seed: int = 20260826
    output_dir: Path = Path("gameshort-out")

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(
                f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}"
            )
        steps = tuple(int(s) for s in self.steps)
        if not steps or any(s < 1 for s in steps):
            raise ValueError("steps must be a non-empty sequence of positive counts")
        object.__setattr__(self, "steps", tuple(sorted(set(steps))))
        if self.x_values is not None:
            xs = tuple(float(x) for x in self.x_values)
            if any(x < 0 for x in xs):
                raise ValueError("x_values must be nonnegative")
            object.__setattr__(self, "x_values", xs)
        if self.lambda_grid is not None:
            object.__setattr__(self, "lambda_grid",
                               tuple(float(v) for v in self.lambda_grid))
        object.__setattr__(self, "output_dir", Path(self.output_dir))

    @property
    def fine_steps(self) -> int:
        return max(self.steps)

    @property
    def grid(self) -> GridSpec:
        return GridSpec(points=self.wealth_grid_points)


@dataclass(frozen=True)
class Check:
    name: str
    measured: float
    threshold: float
    comparison: str  # one of "<=", ">=", ">", "<"
    passed: bool

    @staticmethod
    def of(name: str, measured: float, comparison: str, threshold: float) -> "Check":
        ops = {"<=": lambda a, b: a <= b, ">=": lambda a, b: a >= b,
               ">": lambda a, b: a > b, "<": lambda a, b: a < b}
        return Check(name, float(measured), float(threshold), comparison,
                     bool(ops[comparison](measured, threshold)))


@dataclass(frozen=True)
class ExperimentReport:
    experiment: str
    checks: tuple
    tables: dict
    plots: dict
    summary_path: Path
    metadata: dict = field(default_factory=dict)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)


# ---------------------------------------------------------------------------
# benchmark payoff
# ---------------------------------------------------------------------------

def counterexample_X(lat: Lattice):
    """Cancellation payoff ``(1 + sin(pi t)) * max(z, 1/2)`` per level."""
    out = []
    for k in range(lat.steps + 1):
        t = k * lat.dt
        out.append((1.0 + math.sin(math.pi * t)) * np.maximum(lat.z[k], 0.5))
    return out


def counterexample_payoff(lat: Lattice, stride: int = 1,
                          allow_cancel_at_zero: bool = True) -> GamePayoff:
    """Benchmark claim on ``lat`` with action times restricted to every
    ``stride``-th level (nested refinement of the action-time sets)."""
    n = lat.steps
    if stride < 1 or n % stride != 0:
        raise ValueError(f"stride {stride} must divide the step count {n}")
    X = counterexample_X(lat)
    buyer = [np.zeros(k + 1) for k in range(n)] + [X[n]]
    return GamePayoff(
        exercise_levels=frozenset(range(0, n + 1, stride)),
        buyer=tuple(tuple(b) for b in buyer),
        seller=tuple(tuple(x) for x in X),
        allow_cancel_at_zero=allow_cancel_at_zero,
    )


def interior_cancellation_instance(model: ModelParams, steps: int):
    """Market and payoff for the cancellation class restricted to interior levels.

    The seller must cancel at some level in ``{1, ..., steps - 1}``; the
    buyer's claim is worthless before then.  Realized as a truncated
    lattice with the same step size (maturity ``(steps-1)/steps`` of the
    horizon, forced settlement at X there) and cancellation at level 0
    disallowed.
    """
    if steps < 2:
        raise ValueError("interior cancellation needs at least 2 steps")
    trunc = ModelParams(s0=model.s0, kappa=model.kappa, theta=model.theta,
                        horizon=model.horizon * (steps - 1) / steps)
    lat = build_lattice(trunc, steps - 1)
    X = counterexample_X(lat)
    m = lat.steps
    buyer = [np.zeros(k + 1) for k in range(m)] + [X[m]]
    payoff = GamePayoff(
        exercise_levels=frozenset(range(m + 1)),
        buyer=tuple(tuple(b) for b in buyer),
        seller=tuple(tuple(x) for x in X),
        allow_cancel_at_zero=False,
    )
    return lat, payoff


def terminal_transfer_risk(lat: Lattice, x: float) -> float:
    """Best risk when the seller never cancels before maturity.

    The buyer's claim is worthless before maturity, so the problem is a
    single terminal transfer: minimize E_P[(X_n - V)^+] over terminal
    wealths V >= 0 with E_Q[V] <= x.
    """
    _, _, p_w, q_w = terminal_distribution(lat)
    x_n = counterexample_X(lat)[lat.steps]
    children = [
        (float(p), float(q), PiecewiseLinearFn((0.0, float(c)), (float(c), 0.0)))
        for p, q, c in zip(p_w, q_w, x_n)
    ]
    value, _, _ = transfer_optimize(children, x)
    return value


# ---------------------------------------------------------------------------
# Monte Carlo references
# ---------------------------------------------------------------------------

def nu_monte_carlo(model: ModelParams, samples: int = 1_000_000, seed: int = 0):
    """Monte Carlo estimate of nu = (1/2) E[Z 1{Z < 1/2}] over a unit span.

    Returns ``(estimate, standard_error)``; the density is log-normal,
    ``Z = exp(-a G - a^2/2)`` with ``a = theta/kappa`` and ``G`` standard
    normal.
    """
    a = abs(model.theta / model.kappa)
    rng = np.random.default_rng(seed)
    g = rng.standard_normal(samples)
    z = np.exp(-a * g - 0.5 * a * a)
    vals = 0.5 * z * (z < 0.5)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))


def nu_lattice(model: ModelParams, steps: int = 500) -> float:
    """Lattice estimate of nu from the terminal density over a unit span."""
    unit = ModelParams(s0=model.s0, kappa=model.kappa, theta=model.theta, horizon=1.0)
    lat = build_lattice(unit, steps)
    _, z, p_w, _ = terminal_distribution(lat)
    return float(0.5 * np.sum(p_w * z * (z < 0.5)))


def modulus_reference(model: ModelParams, window_counts, n_paths: int = 4000,
                      n_time: int = 1000, seed: int = 0):
    """Mean path modulus E[sup_{|t-s| <= T/n} |X_t - X_s|] by Monte Carlo.

    Simulates the continuous-time payoff process on a fine time grid and
    returns ``{n: (mean, standard_error)}``.  This is the reference
    envelope controlling how fast the restricted-action-time risks can
    converge; no rate is claimed, only a decreasing trend.
    """
    for n in window_counts:
        if n_time % n != 0:
            raise ValueError(f"window count {n} must divide the time resolution {n_time}")
    a = model.theta / model.kappa
    rng = np.random.default_rng(seed)
    t = np.linspace(0.0, model.horizon, n_time + 1)
    dw = rng.standard_normal((n_paths, n_time)) * math.sqrt(model.horizon / n_time)
    w = np.concatenate((np.zeros((n_paths, 1)), np.cumsum(dw, axis=1)), axis=1)
    z = np.exp(-a * w - 0.5 * a * a * t)
    x = (1.0 + np.sin(math.pi * t / model.horizon)) * np.maximum(z, 0.5)
    out = {}
    for n in window_counts:
        width = n_time // n
        sup = np.zeros(n_paths)
        for offset in range(1, width + 1):
            sup = np.maximum(sup, np.max(np.abs(x[:, offset:] - x[:, :-offset]), axis=1))
        out[int(n)] = (float(sup.mean()), float(sup.std(ddof=1) / math.sqrt(n_paths)))
    return out


# ---------------------------------------------------------------------------
# randomized small instances (shared with the oracle acceptance suite)
# ---------------------------------------------------------------------------

def random_small_instance(rng: np.random.Generator):
    """Random instance small enough for exhaustive enumeration.

    Returns ``(lattice, payoff, x, grid_points)`` with at most 2 steps and
    at most 5 wealth grid points; drift and volatility are drawn so the
    one-step factors always bracket 1.
    """
    n = int(rng.integers(1, 3))
    kappa = float(rng.uniform(0.2, 0.8))
    a = float(rng.uniform(-0.4, 0.4))
    params = ModelParams(s0=float(rng.uniform(0.5, 2.0)), kappa=kappa,
                         theta=a * kappa, horizon=1.0)
    lat = build_lattice(params, n)
    buyer, seller = [], []
    for k in range(n + 1):
        f = rng.uniform(0.0, 1.5, k + 1)
        g = f + rng.uniform(0.0, 1.0, k + 1)
        buyer.append(tuple(float(v) for v in f))
        seller.append(tuple(float(v) for v in g))
    levels = set(range(n + 1))
    if n == 2 and rng.integers(0, 2):
        levels.discard(1)
    payoff = GamePayoff(
        exercise_levels=frozenset(levels),
        buyer=tuple(buyer),
        seller=tuple(seller),
        allow_cancel_at_zero=bool(rng.integers(0, 2)),
    )
    x = float(rng.uniform(0.0, 1.2))
    points = int(rng.integers(2, 6))
    return lat, payoff, x, points


# ---------------------------------------------------------------------------
# output plumbing
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.11e}"
    return str(value)


def _write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def _plot(path: Path, series, xlabel: str, ylabel: str, title: str,
          logy: bool = False) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, xs, ys, style in series:
        ax.plot(xs, ys, style, label=label)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def _finish(cfg: ExperimentConfig, checks, tables, plots, metadata) -> ExperimentReport:
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    summary = {
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "backend": backend_name(),
        "model": {
            "s0": cfg.model.s0, "kappa": cfg.model.kappa,
            "theta": cfg.model.theta, "horizon": cfg.model.horizon,
        },
        "steps": list(cfg.steps),
        "wealth_grid_points": cfg.wealth_grid_points,
        "metadata": metadata,
        "checks": [
            {"name": c.name, "measured": c.measured, "threshold": c.threshold,
             "comparison": c.comparison, "passed": c.passed}
            for c in checks
        ],
        "all_passed": all(c.passed for c in checks),
        "tables": {k: str(v) for k, v in tables.items()},
        "plots": {k: str(v) for k, v in plots.items()},
    }
    summary_path = cfg.output_dir / f"{cfg.experiment}_summary.json"
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return ExperimentReport(cfg.experiment, tuple(checks), tables, plots,
                            summary_path, metadata)


def _validated_x(cfg: ExperimentConfig, nu: float, allow_zero: bool = True):
    xs = cfg.x_values if cfg.x_values is not None else (0.0, nu / 2, 0.9 * nu)
    if not allow_zero:
        xs = tuple(x for x in xs if x > 0) or (nu / 2,)
    for x in xs:
        lo = "[0" if allow_zero else "(0"
        if x >= nu or (not allow_zero and x <= 0):
            raise ValueError(
                f"initial capital {x} outside the valid range {lo}, nu) "
                f"with nu = {nu:.6f}; the risk-line analysis only applies below nu"
            )
    return xs


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def run_line_check(cfg: ExperimentConfig) -> ExperimentReport:
    """Tabulate R_n(x) against the line 1 - 2x on the finest lattice."""
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    nu = compute_nu(cfg.model)
    xs = _validated_x(cfg, nu)
    n = cfg.fine_steps
    lat = build_lattice(cfg.model, n)
    payoff = counterexample_payoff(lat)

    with ThreadPoolExecutor(max_workers=4) as pool:
        sols = list(pool.map(lambda x: solve_shortfall(lat, payoff, x, cfg.grid), xs))

    rows, checks = [], []
    for x, sol in zip(xs, sols):
        line = 1.0 - 2.0 * x
        gap = sol.risk - line
        rows.append((x, sol.risk, line, gap))
        checks.append(Check.of(f"weak_duality_gap_nonnegative[x={x:.6g}]", gap, ">=", -1e-12))
        checks.append(Check.of(f"gap_within_band[x={x:.6g}]", gap, "<=", 0.02))
        if x == 0.0:
            checks.append(Check.of("risk_at_zero_is_one", abs(sol.risk - 1.0), "<=", 1e-9))

    table = _write_csv(cfg.output_dir / "line_check.csv",
                       ["x", "risk", "line_1_minus_2x", "gap"], rows)

    grid_x, root_vals = sols[0].surface.root_slice()
    mask = grid_x <= 1.5 * nu
    plot = _plot(
        cfg.output_dir / "line_check.svg",
        [
            ("R_n(x), n=%d" % n, grid_x[mask], root_vals[mask], "-"),
            ("1 - 2x", grid_x[mask], 1.0 - 2.0 * grid_x[mask], "--"),
            ("checked x", np.array(xs), np.array([s.risk for s in sols]), "o"),
        ],
        "initial capital x", "minimal shortfall risk",
        f"risk line vs 1-2x (n={n}, nu={nu:.5f})",
    )
    return _finish(cfg, checks, {"line_check": table}, {"line_check": plot},
                   {"nu": nu, "x_values": list(xs), "fine_steps": n})


def run_dual_curve(cfg: ExperimentConfig) -> ExperimentReport:
    """Dual function F_n(lambda) on the finest lattice; flat at 1 beyond 2."""
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    n = cfg.fine_steps
    lat = build_lattice(cfg.model, n)
    X = counterexample_X(lat)
    anchor = (2.0, 3.0, 10.0)
    if cfg.lambda_grid is not None:
        lambdas = np.unique(np.concatenate((np.asarray(cfg.lambda_grid, dtype=float),
                                            anchor)))
    else:
        lambdas = np.unique(np.concatenate((default_lambda_grid(), anchor)))
    curve = dual_curve(lat, X, lambdas)

    rows = list(zip(curve.lambdas, curve.values))
    checks = []
    for lam in anchor:
        val = curve.values[np.isclose(curve.lambdas, lam)][0]
        checks.append(Check.of(f"dual_flatness[lambda={lam:g}]", abs(val - 1.0), "<=", 0.01))
    nu = compute_nu(cfg.model)
    slope = left_derivative_F(curve, 2.0)
    checks.append(Check.of("left_slope_at_2_nonnegative", slope, ">=", 0.0))

    table = _write_csv(cfg.output_dir / "dual_curve.csv", ["lambda", "F"], rows)
    plot = _plot(
        cfg.output_dir / "dual_curve.svg",
        [
            ("F_n(lambda), n=%d" % n, curve.lambdas, curve.values, "-"),
            ("lambda = 2", np.array([2.0, 2.0]),
             np.array([float(curve.values.min()), 1.02]), ":"),
        ],
        "lambda", "F_n(lambda)", f"dual stopping value (n={n})",
    )
    return _finish(cfg, checks, {"dual_curve": table}, {"dual_curve": plot},
                   {"nu": nu, "left_slope_at_2": slope, "fine_steps": n})


def run_convergence(cfg: ExperimentConfig) -> ExperimentReport:
    """Gaps under nested action-time refinement, with an MC modulus reference."""
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    nu = compute_nu(cfg.model)
    xs = _validated_x(cfg, nu)
    fine = cfg.fine_steps
    for n in cfg.steps:
        if fine % n != 0:
            raise ValueError(
                f"step counts must divide the finest count {fine} "
                f"(nested action-time sets); got {n}"
            )
    lat = build_lattice(cfg.model, fine)

    cells = [(n, x) for n in cfg.steps for x in xs]

    def solve_cell(cell):
        n, x = cell
        payoff = counterexample_payoff(lat, stride=fine // n)
        return solve_shortfall(lat, payoff, x, cfg.grid).risk

    with ThreadPoolExecutor(max_workers=4) as pool:
        risks = list(pool.map(solve_cell, cells))

    rows = []
    gaps = {x: [] for x in xs}
    for (n, x), risk in zip(cells, risks):
        line = 1.0 - 2.0 * x
        gap = risk - line
        rows.append((n, x, risk, line, gap))
        gaps[x].append((n, gap))

    checks = []
    for x in xs:
        seq = [g for _, g in sorted(gaps[x])]
        worst_rise = max(
            (seq[i + 1] - seq[i] for i in range(len(seq) - 1)), default=0.0
        )
        checks.append(Check.of(f"gaps_nonincreasing[x={x:.6g}]", worst_rise, "<=", 1e-9))
        checks.append(Check.of(f"final_gap_nonnegative[x={x:.6g}]", seq[-1], ">=", -1e-12))
        checks.append(Check.of(f"final_gap_within_band[x={x:.6g}]", seq[-1], "<=", 0.02))

    modulus = modulus_reference(cfg.model, cfg.steps, seed=cfg.seed)
    mod_rows = [(n, cfg.model.horizon / n, modulus[n][0], modulus[n][1])
                for n in cfg.steps]
    mod_means = [modulus[n][0] for n in cfg.steps]
    checks.append(Check.of(
        "modulus_reference_decreasing",
        max((mod_means[i + 1] - mod_means[i] for i in range(len(mod_means) - 1)),
            default=0.0),
        "<=", 0.0,
    ))

    table = _write_csv(cfg.output_dir / "convergence.csv",
                       ["steps", "x", "risk", "line_1_minus_2x", "gap"], rows)
    mod_table = _write_csv(cfg.output_dir / "convergence_modulus.csv",
                           ["steps", "window", "modulus_mean", "modulus_stderr"],
                           mod_rows)
    series = [
        (f"gap at x={x:.4g}", np.array(sorted(n for n, _ in gaps[x])),
         np.array([g for _, g in sorted(gaps[x])]), "o-")
        for x in xs
    ]
    series.append(("MC modulus reference", np.array(cfg.steps),
                   np.array(mod_means), "s--"))
    plot = _plot(cfg.output_dir / "convergence.svg", series,
                 "action-time refinement (steps)", "gap over 1 - 2x",
                 f"nested refinement on a fixed {fine}-step lattice", logy=True)
    return _finish(cfg, checks,
                   {"convergence": table, "modulus": mod_table},
                   {"convergence": plot},
                   {"nu": nu, "x_values": list(xs), "fine_steps": fine,
                    "modulus_seed": cfg.seed})


def run_nonattainment(cfg: ExperimentConfig) -> ExperimentReport:
    """Best risk inside each restricted cancellation class, per capital x.

    Classes: cancel immediately (excess over the line is exactly x), never
    cancel before maturity (single terminal transfer), cancel only at
    interior levels (truncated-lattice stopping problem).
    """
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    nu = compute_nu(cfg.model)
    xs = _validated_x(cfg, nu, allow_zero=False)
    n = cfg.fine_steps
    lat = build_lattice(cfg.model, n)
    x0 = float(counterexample_X(lat)[0][0])
    int_lat, int_payoff = interior_cancellation_instance(cfg.model, n)

    rows, checks = [], []
    for x in xs:
        line = 1.0 - 2.0 * x
        risk0 = max(x0 - x, 0.0)
        risk_n = terminal_transfer_risk(lat, x)
        risk_int = solve_shortfall(int_lat, int_payoff, x, cfg.grid).risk
        for label, risk in (("cancel_at_0", risk0),
                            ("cancel_at_maturity", risk_n),
                            ("cancel_interior", risk_int)):
            rows.append((x, label, risk, line, risk - line))
        checks.append(Check.of(f"cancel_at_0_excess_equals_x[x={x:.6g}]",
                               abs((risk0 - line) - x), "<=", 1e-9))
        checks.append(Check.of(f"cancel_at_maturity_excess_positive[x={x:.6g}]",
                               risk_n - line, ">", 0.0))
        checks.append(Check.of(f"cancel_interior_excess_positive[x={x:.6g}]",
                               risk_int - line, ">", 0.0))

    # the driver of the interior excess: the per-level stopped reward
    # E_P[z] * (1 + sin(pi t_k)) exceeds 1 strictly at interior levels
    driver_rows = []
    worst_driver = math.inf
    from .market import level_weights

    for k in range(1, n):
        p_w, _ = level_weights(lat, k)
        reward = float(np.sum(p_w * lat.z[k])) * (1.0 + math.sin(math.pi * k * lat.dt))
        driver_rows.append((k, k * lat.dt, reward))
        worst_driver = min(worst_driver, reward)
    checks.append(Check.of("interior_driver_exceeds_one", worst_driver, ">", 1.0))

    table = _write_csv(cfg.output_dir / "nonattainment.csv",
                       ["x", "cancellation_class", "risk", "line_1_minus_2x",
                        "excess"], rows)
    driver_table = _write_csv(cfg.output_dir / "nonattainment_driver.csv",
                              ["level", "t", "stopped_reward"], driver_rows)
    by_class = {}
    for x, label, risk, line, excess in rows:
        by_class.setdefault(label, []).append((x, excess))
    plot = _plot(
        cfg.output_dir / "nonattainment.svg",
        [(label, np.array([p[0] for p in pts]), np.array([p[1] for p in pts]), "o-")
         for label, pts in by_class.items()],
        "initial capital x", "excess risk over 1 - 2x",
        f"restricted cancellation classes (n={n})",
    )
    return _finish(cfg, checks,
                   {"nonattainment": table, "driver": driver_table},
                   {"nonattainment": plot},
                   {"nu": nu, "x_values": list(xs), "fine_steps": n})


def run_oracle_suite(cfg: ExperimentConfig, count: int = 200) -> ExperimentReport:
    """Randomized equivalence battery: DP vs exhaustive enumeration."""
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(cfg.seed)
    rows = []
    worst_dp = 0.0
    worst_saddle = 0.0
    for i in range(count):
        lat, payoff, x, points = random_small_instance(rng)
        dp = solve_shortfall(lat, payoff, x, GridSpec(points=points)).risk
        enum = shortfall_value_enum(lat, payoff, x, points)
        infsup, supinf = game_value_enum(lat, payoff)
        diff = abs(dp - enum)
        saddle = abs(infsup - supinf)
        worst_dp = max(worst_dp, diff)
        worst_saddle = max(worst_saddle, saddle)
        rows.append((i, lat.steps, points, x, dp, enum, diff, saddle))
    checks = [
        Check.of("dp_matches_enumeration", worst_dp, "<=", 1e-6),
        Check.of("dynkin_saddle_exact", worst_saddle, "<=", 0.0),
    ]
    table = _write_csv(cfg.output_dir / "oracle_suite.csv",
                       ["instance", "steps", "grid_points", "x", "dp_risk",
                        "enum_risk", "diff", "saddle_gap"], rows)
    plot = _plot(
        cfg.output_dir / "oracle_suite.svg",
        [("DP vs enumeration", np.array([r[4] for r in rows]),
          np.array([r[5] for r in rows]), ".")],
        "DP risk", "enumerated risk", f"{count} random instances",
    )
    return _finish(cfg, checks, {"oracle_suite": table}, {"oracle_suite": plot},
                   {"instances": count, "worst_dp_diff": worst_dp,
                    "worst_saddle_gap": worst_saddle})


def run_price(cfg: ExperimentConfig) -> ExperimentReport:
    """Perfect-hedging prices: the benchmark claim and a constant claim."""
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    rows, checks = [], []
    const_value = 0.7
    prices = []
    for n in cfg.steps:
        lat = build_lattice(cfg.model, n)
        payoff = counterexample_payoff(lat)
        price = game_price_Q(lat, payoff)
        prices.append(price)
        rows.append(("benchmark_claim", n, price))
        flat = tuple(tuple(np.full(k + 1, const_value)) for k in range(n + 1))
        const_payoff = GamePayoff(exercise_levels=frozenset(range(n + 1)),
                                  buyer=flat, seller=flat)
        const_price = game_price_Q(lat, const_payoff)
        rows.append(("constant_claim", n, const_price))
        checks.append(Check.of(f"constant_claim_price[n={n}]",
                               abs(const_price - const_value), "<=", 1e-12))
    checks.append(Check.of("benchmark_price_at_initial_payoff",
                           abs(prices[-1] - 1.0), "<=", 1e-9))
    table = _write_csv(cfg.output_dir / "price.csv",
                       ["instrument", "steps", "price"], rows)
    plot = _plot(
        cfg.output_dir / "price.svg",
        [("benchmark claim", np.array(cfg.steps), np.array(prices), "o-")],
        "steps", "perfect-hedging price", "price vs refinement",
    )
    return _finish(cfg, checks, {"price": table}, {"price": plot},
                   {"constant_claim_value": const_value})


_RUNNERS = {
    "line_check": run_line_check,
    "dual_curve": run_dual_curve,
    "convergence": run_convergence,
    "nonattainment": run_nonattainment,
    "oracle_suite": run_oracle_suite,
    "price": run_price,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    return _RUNNERS[cfg.experiment](cfg)
