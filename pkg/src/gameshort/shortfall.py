"""Shortfall-risk minimization by backward induction on a wealth grid.

Each lattice node carries a wealth grid spanning ``[0, z_max]`` where
``z_max`` is the perfect-hedging value of the remaining game from that
node.  The slice ``B_k(z)`` of minimal residual risk is propagated
backward: the continuation at budget ``z`` is the exact optimum of the
budget-constrained transfer to the children (children's convex slices
merged in slope order), composed with the exercise payoffs

    B_k(z) = min((g_k - z)^+, max((f_k - z)^+, continuation(z)))

and convexified before the next transfer step.  Convexification is exact
for the model semantics: the transfer infimum only ever sees the convex
envelope of the next slice, the envelope value being attained by a
two-point wealth randomization on the gap endpoints.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynkin import GamePayoff, q_value_levels
from .envelopes import PiecewiseLinearFn, convex_envelope, gap_intervals, randomize_to_envelope
from .kernels import backend_name, backward_step, continuation_at
from .market import Lattice

__all__ = [
    "GridSpec",
    "ValueSurface",
    "PlanNode",
    "RiskSolution",
    "PlanError",
    "transfer_optimize",
    "solve_shortfall",
    "risk_of_plan",
    "plan_from_node_functions",
]

_TIE_TOL = 1e-12


class PlanError(ValueError):
    """Raised when a wealth plan violates admissibility."""


@dataclass(frozen=True)
class GridSpec:
    """Wealth-grid resolution: uniform grids with ``points`` abscissae per node."""

    points: int = 201

    def __post_init__(self):
        if self.points < 2:
            raise ValueError("wealth grid needs at least 2 points")


@dataclass(frozen=True)
class ValueSurface:
    """Per-node slices of minimal residual risk as a function of wealth.

    ``hull[k]`` has shape ``(k + 1, points)``: the convexified slice of
    node ``(k, j)`` sampled on ``linspace(0, zmax[k][j], points)``.
    ``raw[k]`` (kept on request, always at the root) holds the composed
    slice before convexification.
    """

    points: int
    zmax: tuple
    hull: tuple
    raw: tuple | None
    raw_root: np.ndarray

    def grid(self, k: int, j: int) -> np.ndarray:
        return np.linspace(0.0, self.zmax[k][j], self.points)

    def slice_values(self, k: int, j: int) -> tuple[np.ndarray, np.ndarray]:
        return self.grid(k, j), self.hull[k][j]

    def slice_fn(self, k: int, j: int) -> PiecewiseLinearFn:
        g, v = self.slice_values(k, j)
        if self.zmax[k][j] <= 0.0:
            raise ValueError(f"node ({k},{j}) has a degenerate wealth grid")
        return PiecewiseLinearFn(g, v)

    def root_slice(self) -> tuple[np.ndarray, np.ndarray]:
        """Root wealth grid and B_0 values (before convexification)."""
        return self.grid(0, 0), self.raw_root


@dataclass
class PlanNode:
    """One realized state of a hedge: node, wealth, stop flags, successors.

    ``up``/``dn`` list ``(child, weight)`` pairs; the weights are the
    randomization atoms within the market move and sum to one per move.
    """

    level: int
    j: int
    wealth: float
    stop_seller: bool = False
    stop_buyer: bool = False
    multiplier: float | None = None
    up: list = field(default_factory=list)
    dn: list = field(default_factory=list)


@dataclass(frozen=True)
class RiskSolution:
    risk: float
    wealth_targets: PlanNode | None
    seller_rule: PlanNode | None  # stop flags live on the plan states
    surface: ValueSurface
    diagnostics: dict


# ---------------------------------------------------------------------------
# single-step budgeted transfer
# ---------------------------------------------------------------------------

def transfer_optimize(children, budget: float):
    """Minimal expected convexified loss over a budgeted transfer.

    ``children`` is a sequence of ``(p, q, loss)`` triples with market
    weights ``p`` and pricing weights ``q`` (each summing to one) and
    ``loss`` a piecewise-linear function of the wealth assigned to that
    child (a bare float stands for a degenerate child whose only feasible
    wealth is 0).  Minimizes ``sum p_i * env(loss_i)(theta_i)`` subject to
    ``sum q_i * theta_i <= budget`` by taking envelope segments in
    increasing order of their budget-scaled slopes, which is the exact
    optimizer the multiplier bisection would converge to.

    Returns ``(value, thetas, lam)`` where ``lam >= 0`` is the marginal
    multiplier (minus the scaled slope of the first segment left untaken).
    Ties break toward the smallest thetas.
    """
    if budget < 0:
        raise ValueError(f"infeasible: negative budget {budget}")
    p = np.array([c[0] for c in children], dtype=float)
    q = np.array([c[1] for c in children], dtype=float)
    if np.any(p <= 0) or np.any(q <= 0):
        raise ValueError("child weights must be positive")
    if abs(p.sum() - 1.0) > 1e-9 or abs(q.sum() - 1.0) > 1e-9:
        raise ValueError("child weights must each sum to 1")

    thetas = np.zeros(len(children))
    value = 0.0
    segs = []  # (scaled slope, child, theta width, w width)
    for i, (pi, qi, loss) in enumerate(children):
        if isinstance(loss, (int, float)):
            value += pi * float(loss)
            continue
        env = convex_envelope(loss)
        if abs(env.knots[0]) > 1e-12:
            raise ValueError("loss functions must start at theta = 0")
        value += pi * env.values[0]
        dth = np.diff(env.knots)
        slopes = pi * np.diff(env.values) / (qi * dth)
        for s, w in zip(slopes, dth):
            segs.append((float(s), i, float(w), float(qi * w)))
    segs.sort(key=lambda t: (t[0], t[1]))

    remaining = float(budget)
    lam = 0.0
    for s, i, dth, dw in segs:
        if s >= 0.0:
            break
        if remaining <= _TIE_TOL * max(1.0, budget):
            lam = -s
            break
        take = min(dw, remaining)
        value += s * take
        thetas[i] += take / q[i]
        remaining -= take
        if take < dw:
            lam = -s
            break
    return float(value), thetas, float(lam)


# ---------------------------------------------------------------------------
# backward induction
# ---------------------------------------------------------------------------

def _build_surface(lat: Lattice, payoff: GamePayoff, grid: GridSpec,
                   keep_raw: bool) -> ValueSurface:
    n = lat.steps
    m = grid.points
    zmax = [np.maximum(v, 0.0) for v in q_value_levels(lat, payoff)]
    frac = np.arange(m) / (m - 1)

    hull: list[np.ndarray] = [None] * (n + 1)
    raw: list[np.ndarray] = [None] * (n + 1) if keep_raw else None

    z_n = zmax[n][:, None] * frac[None, :]
    mat = np.maximum(np.asarray(payoff.buyer[n], dtype=float)[:, None] - z_n, 0.0)
    hull[n] = mat
    if keep_raw:
        raw[n] = mat
    raw_root = None
    for k in range(n - 1, -1, -1):
        exercise = k in payoff.exercise_levels
        apply_min = k > 0 or payoff.allow_cancel_at_zero
        pre, hl = backward_step(
            hull[k + 1], zmax[k + 1], zmax[k], lat.q_up,
            fv=np.asarray(payoff.buyer[k], dtype=float),
            gv=np.asarray(payoff.seller[k], dtype=float),
            exercise=exercise, apply_min_g=apply_min,
        )
        hull[k] = hl
        if keep_raw:
            raw[k] = pre
        if k == 0:
            raw_root = pre[0]
    return ValueSurface(
        points=m,
        zmax=tuple(zmax),
        hull=tuple(hull),
        raw=tuple(raw) if keep_raw else None,
        raw_root=raw_root,
    )


def _node_value_at(lat: Lattice, payoff: GamePayoff, surface: ValueSurface,
                   k: int, j: int, w: float):
    """Exact composed slice value at an arbitrary wealth (no resampling).

    Returns ``(value, fp, gp, cont, stop_seller, stop_buyer)``.
    """
    n = lat.steps
    if k == n:
        fp = max(float(payoff.buyer[n][j]) - w, 0.0)
        return fp, fp, fp, fp, True, True
    cont = continuation_at(
        surface.hull[k + 1][j + 1], surface.zmax[k + 1][j + 1],
        surface.hull[k + 1][j], surface.zmax[k + 1][j],
        lat.q_up, w,
    )
    exercise = k in payoff.exercise_levels
    if not exercise:
        return cont, 0.0, np.inf, cont, False, False
    fp = max(float(payoff.buyer[k][j]) - w, 0.0)
    gp = max(float(payoff.seller[k][j]) - w, 0.0)
    val = max(fp, cont)
    stop_b = fp >= cont
    stop_s = False
    if k > 0 or payoff.allow_cancel_at_zero:
        if gp <= val:
            val = gp
            stop_s = True
            stop_b = stop_b and fp >= gp
    return val, fp, gp, cont, stop_s, stop_b


def _slice_loss(surface: ValueSurface, k: int, j: int):
    """Child slice as a transfer loss: PL function, or a float if degenerate."""
    if surface.zmax[k][j] <= 0.0:
        return float(surface.hull[k][j][0])
    return surface.slice_fn(k, j)


def _split_on_gaps(surface: ValueSurface, k: int, j: int, theta: float):
    """Atoms realizing wealth ``theta`` at a child.

    Inside a gap of (raw slice, hull) the wealth randomizes onto the gap
    endpoints; off the gaps a wealth strictly between grid knots splits onto
    the bracketing knots (the hull is affine on each cell, so both splits
    preserve the slice value and the conditional mean exactly).
    """
    zmax = surface.zmax[k][j]
    if surface.raw is None or zmax <= 0.0 or theta >= zmax:
        return [(theta, 1.0)]
    grid = surface.grid(k, j)
    pre_fn = PiecewiseLinearFn(grid, surface.raw[k][j])
    hull_fn = PiecewiseLinearFn(grid, surface.hull[k][j])
    gap = gap_intervals(pre_fn, hull_fn).locate(theta)
    if gap is not None:
        return list(randomize_to_envelope(theta, gap))
    i = int(np.searchsorted(grid, theta))
    tol = 1e-12 * max(1.0, zmax)
    if (i < len(grid) and abs(grid[i] - theta) <= tol) or \
            (i > 0 and abs(grid[i - 1] - theta) <= tol):
        return [(theta, 1.0)]
    a, b = float(grid[i - 1]), float(grid[i])
    p = (theta - a) / (b - a)
    return [(b, p), (a, 1.0 - p)]


def _extract_plan(lat: Lattice, payoff: GamePayoff, surface: ValueSurface,
                  x: float, max_states: int):
    count = [0]
    multipliers = []

    def build(k: int, j: int, w: float) -> PlanNode:
        count[0] += 1
        if count[0] > max_states:
            raise RuntimeError(
                f"plan extraction exceeded {max_states} states; "
                "wealth plans are path-dependent, use fewer steps"
            )
        val, fp, gp, cont, stop_s, stop_b = _node_value_at(lat, payoff, surface, k, j, w)
        node = PlanNode(level=k, j=j, wealth=w, stop_seller=stop_s, stop_buyer=stop_b)
        # buyer-stop states are not leaves: the buyer's best response is
        # recomputed at evaluation time, so the wealth plan must extend
        # through them; only a seller stop (or maturity) ends the hedge.
        if k == lat.steps or stop_s:
            return node
        loss_up = _slice_loss(surface, k + 1, j + 1)
        loss_dn = _slice_loss(surface, k + 1, j)
        _, thetas, lam = transfer_optimize(
            [(0.5, lat.q_up, loss_up), (0.5, 1.0 - lat.q_up, loss_dn)], w
        )
        node.multiplier = lam
        multipliers.append((k, j, lam))
        # park unspent budget as cash in both children: keeps E_Q[D'|node] = w
        slack = w - (lat.q_up * thetas[0] + (1.0 - lat.q_up) * thetas[1])
        if slack > _TIE_TOL * max(1.0, w):
            thetas = thetas + slack
        for target, jj, atoms in (
            (node.up, j + 1, _split_on_gaps(surface, k + 1, j + 1, thetas[0])),
            (node.dn, j, _split_on_gaps(surface, k + 1, j, thetas[1])),
        ):
            for theta, weight in atoms:
                target.append((build(k + 1, jj, theta), weight))
        return node

    root = build(0, 0, x)
    return root, multipliers


def solve_shortfall(lat: Lattice, payoff: GamePayoff, x: float,
                    grid: GridSpec = GridSpec(), extract_plan: bool = False,
                    max_plan_states: int = 200_000) -> RiskSolution:
    """Minimal shortfall risk and (optionally) an attaining hedge.

    The risk is the root slice evaluated exactly at ``x`` (the root
    continuation is read off the merged breakpoints, not resampled).  Plan
    extraction walks the realized states forward from ``D_0 = x``,
    randomizing wealth onto gap endpoints where the optimizer lands inside
    a gap; realized wealth trees are path-dependent, so extraction is only
    practical for small step counts.
    """
    if x < 0:
        raise ValueError(f"initial capital must be nonnegative, got {x}")
    surface = _build_surface(lat, payoff, grid, keep_raw=extract_plan)
    if x >= surface.zmax[0][0]:
        risk = 0.0
    else:
        risk, *_ = _node_value_at(lat, payoff, surface, 0, 0, x)
        risk = max(risk, 0.0)
    plan = None
    multipliers = []
    if extract_plan:
        plan, multipliers = _extract_plan(lat, payoff, surface, x, max_plan_states)
    return RiskSolution(
        risk=float(risk),
        wealth_targets=plan,
        seller_rule=plan,
        surface=surface,
        diagnostics={"backend": backend_name(), "multipliers": multipliers},
    )


# ---------------------------------------------------------------------------
# plan evaluation
# ---------------------------------------------------------------------------

def plan_from_node_functions(lat: Lattice, wealth_levels, seller_stop_levels=None) -> PlanNode:
    """Deterministic plan tree from per-node wealth (and optional stop) tables."""
    def build(k: int, j: int) -> PlanNode:
        stop = bool(seller_stop_levels[k][j]) if seller_stop_levels is not None else False
        node = PlanNode(level=k, j=j, wealth=float(wealth_levels[k][j]),
                        stop_seller=stop)
        if k < lat.steps and not stop:
            node.up.append((build(k + 1, j + 1), 1.0))
            node.dn.append((build(k + 1, j), 1.0))
        return node

    return build(0, 0)


def risk_of_plan(lat: Lattice, payoff: GamePayoff, plan: PlanNode,
                 tol: float = 1e-9) -> float:
    """Shortfall risk of a fixed hedge: the buyer's best response.

    Validates admissibility (nonnegative wealth) and the Q-supermartingale
    property of the wealth tree along the way.
    """
    q = lat.q_up

    def value(node: PlanNode) -> float:
        w = node.wealth
        if w < -tol:
            raise PlanError(f"negative wealth {w} at level {node.level}")
        k, j = node.level, node.j
        if k == lat.steps:
            return max(float(payoff.buyer[k][j]) - w, 0.0)
        exercise = k in payoff.exercise_levels
        cancel_ok = exercise and (k > 0 or payoff.allow_cancel_at_zero)
        if cancel_ok and node.stop_seller:
            return max(float(payoff.seller[k][j]) - w, 0.0)
        if not node.up or not node.dn:
            raise PlanError(f"plan truncated before maturity at level {k}")
        for atoms in (node.up, node.dn):
            s = sum(wt for _, wt in atoms)
            if abs(s - 1.0) > tol:
                raise PlanError("randomization weights within a move must sum to 1")
        ew = q * sum(wt * c.wealth for c, wt in node.up) \
            + (1.0 - q) * sum(wt * c.wealth for c, wt in node.dn)
        if ew > w + tol:
            raise PlanError(
                f"wealth plan is not a Q-supermartingale at level {k}: "
                f"E_Q[next] = {ew} > {w}"
            )
        cont = 0.5 * sum(wt * value(c) for c, wt in node.up) \
            + 0.5 * sum(wt * value(c) for c, wt in node.dn)
        if exercise:
            cont = max(cont, max(float(payoff.buyer[k][j]) - w, 0.0))
        return cont

    return float(value(plan))
