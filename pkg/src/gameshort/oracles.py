"""Brute-force reference computations.

Everything here is deliberately naive: exhaustive enumeration over
stopping rules, pairwise-chord envelopes, and budget-split searches.
These serve as independent oracles for the dynamic-programming solvers in
the test suite and the ``oracle_suite`` experiment; none of it shares code
with the production paths.
"""

from __future__ import annotations

import itertools

import numpy as np

from .dynkin import GamePayoff
from .envelopes import PiecewiseLinearFn
from .market import Lattice

__all__ = [
    "enumerate_stop_rules",
    "kernel_expectation",
    "game_value_enum",
    "q_game_value_enum",
    "stop_inf_enum",
    "envelope_pairwise",
    "transfer_value_bruteforce",
    "shortfall_value_enum",
]


# ---------------------------------------------------------------------------
# stopping-rule enumeration
# ---------------------------------------------------------------------------

def enumerate_stop_rules(n: int, exercise_levels, free_level0: bool = True,
                         start_level: int = 0):
    """All adapted stop/continue tables on levels ``start_level..n``.

    Maturity always stops; non-exercise levels never stop.  Yields lists
    indexed by absolute level of bool arrays.
    """
    free_nodes = []
    for k in range(start_level, n):
        if k in exercise_levels and (k > 0 or free_level0):
            for j in range(k + 1):
                free_nodes.append((k, j))
    for bits in itertools.product((False, True), repeat=len(free_nodes)):
        rule = [np.zeros(k + 1, dtype=bool) for k in range(n + 1)]
        rule[n][:] = True
        for (k, j), b in zip(free_nodes, bits):
            rule[k][j] = b
        yield rule


def kernel_expectation(lat: Lattice, payoff: GamePayoff, rule_s, rule_b,
                       wealth=None, measure: str = "P",
                       positive_part: bool = True,
                       start: tuple[int, int] = (0, 0)) -> float:
    """E[(H(sigma, tau) - V)^+] for fixed stop tables, by path enumeration."""
    n = lat.steps
    p_up = lat.q_up if measure == "Q" else 0.5

    def settle(k: int, j: int, stop_s: bool, stop_b: bool) -> float:
        pay = payoff.buyer[k][j] if stop_b else payoff.seller[k][j]
        v = wealth[k][j] if wealth is not None else 0.0
        out = pay - v
        return max(out, 0.0) if positive_part else out

    def walk(k: int, j: int) -> float:
        stop_b = bool(rule_b[k][j]) and k in payoff.exercise_levels
        stop_s = (
            bool(rule_s[k][j])
            and k in payoff.exercise_levels
            and (k > 0 or payoff.allow_cancel_at_zero)
        )
        if k == n:
            return settle(k, j, stop_s, True)
        if stop_s or stop_b:
            return settle(k, j, stop_s, stop_b)
        return p_up * walk(k + 1, j + 1) + (1.0 - p_up) * walk(k + 1, j)

    return walk(*start)


def game_value_enum(lat: Lattice, payoff: GamePayoff, wealth=None,
                    measure: str = "P", positive_part: bool = True,
                    start: tuple[int, int] = (0, 0)):
    """(inf-sup, sup-inf) of the stopping game by rule enumeration."""
    n = lat.steps
    k0 = start[0]
    seller_rules = list(
        enumerate_stop_rules(n, payoff.exercise_levels,
                             free_level0=payoff.allow_cancel_at_zero,
                             start_level=k0)
    )
    buyer_rules = list(
        enumerate_stop_rules(n, payoff.exercise_levels, start_level=k0)
    )

    def payout(rs, rb):
        return kernel_expectation(lat, payoff, rs, rb, wealth=wealth,
                                  measure=measure, positive_part=positive_part,
                                  start=start)

    table = np.array([[payout(rs, rb) for rb in buyer_rules] for rs in seller_rules])
    infsup = table.max(axis=1).min()
    supinf = table.min(axis=0).max()
    return float(infsup), float(supinf)


def q_game_value_enum(lat: Lattice, payoff: GamePayoff,
                      start: tuple[int, int] = (0, 0)) -> float:
    """Perfect-hedging price from a node by enumeration under Q."""
    infsup, _ = game_value_enum(lat, payoff, wealth=None, measure="Q",
                                positive_part=False, start=start)
    return infsup


def stop_inf_enum(lat: Lattice, reward, allow_zero: bool = True) -> float:
    """min over stopping rules of the expected stopped reward under P."""
    n = lat.steps
    best = np.inf
    all_levels = frozenset(range(n + 1))
    for rule in enumerate_stop_rules(n, all_levels, free_level0=allow_zero):
        def walk(k, j):
            if k == n or rule[k][j]:
                return reward[k][j]
            return 0.5 * walk(k + 1, j + 1) + 0.5 * walk(k + 1, j)
        best = min(best, walk(0, 0))
    return float(best)


# ---------------------------------------------------------------------------
# envelopes and transfers
# ---------------------------------------------------------------------------

def envelope_pairwise(f: PiecewiseLinearFn) -> np.ndarray:
    """Convex-envelope values at the knots by exhaustive chord search."""
    x, y = f.knots, f.values
    m = len(x)
    out = y.copy()
    for k in range(m):
        for i in range(k + 1):
            for j in range(k, m):
                if i == j:
                    cand = y[i]
                else:
                    t = (x[k] - x[i]) / (x[j] - x[i])
                    cand = (1 - t) * y[i] + t * y[j]
                if cand < out[k]:
                    out[k] = cand
    return out


def _env_interp(f: PiecewiseLinearFn):
    env_vals = envelope_pairwise(f)
    return lambda t: np.interp(t, f.knots, env_vals)


def transfer_value_bruteforce(children, budget: float, steps: int = 4000) -> float:
    """Budgeted-transfer optimum for two children by fine theta-grid search.

    Convex envelopes come from the pairwise-chord oracle; the second
    child's wealth is searched over its whole grid below the budget
    residual (running minima), so non-monotone losses are handled.
    """
    (p1, q1, l1), (p2, q2, l2) = children

    def env_grid(loss):
        if isinstance(loss, (int, float)):
            return np.array([0.0]), np.array([float(loss)]), 0.0
        cap = float(loss.knots[-1])
        grid = np.linspace(0.0, cap, steps + 1)
        vals = _env_interp(loss)(grid)
        return grid, vals, cap

    g1, e1, cap1 = env_grid(l1)
    g2, e2, cap2 = env_grid(l2)
    run2 = np.minimum.accumulate(e2)  # best env2 over [0, g2[i]]
    best = np.inf
    for t1, v1 in zip(g1, e1):
        if q1 * t1 > budget + 1e-15:
            break
        bound = (budget - q1 * t1) / q2
        idx = int(np.searchsorted(g2, bound + 1e-15)) - 1
        idx = max(min(idx, len(g2) - 1), 0)
        val = p1 * v1 + p2 * run2[idx]
        if val < best:
            best = val
    return float(best)


# ---------------------------------------------------------------------------
# shortfall recursion by enumeration
# ---------------------------------------------------------------------------

def shortfall_value_enum(lat: Lattice, payoff: GamePayoff, x: float,
                         points: int) -> float:
    """Minimal shortfall risk by exhaustive search over grid-valued plans.

    Wealth handed to a child is a mixture of points of the child's uniform
    grid (the randomized plans the model semantics allow); the best
    mixture for a given conditional mean is found by chord search over all
    grid pairs, and the budget split between the two children is searched
    over all splits that pin one child's mean to a grid point.
    """
    n = lat.steps
    q_u = lat.q_up
    q_d = 1.0 - q_u
    zmax = [
        np.array([q_game_value_enum(lat, payoff, start=(k, j)) for j in range(k + 1)])
        for k in range(n + 1)
    ]
    zmax = [np.maximum(v, 0.0) for v in zmax]

    def value(k: int, j: int, w: float) -> float:
        if k == n:
            return max(payoff.buyer[n][j] - w, 0.0)
        cont = best_transfer(k, j, w)
        if k in payoff.exercise_levels:
            v = max(max(payoff.buyer[k][j] - w, 0.0), cont)
            if k > 0 or payoff.allow_cancel_at_zero:
                v = min(v, max(payoff.seller[k][j] - w, 0.0))
            return v
        return cont

    def best_transfer(k: int, j: int, w: float) -> float:
        def child(jj):
            cap = zmax[k + 1][jj]
            grid = np.linspace(0.0, cap, points) if cap > 0 else np.array([0.0])
            vals = np.array([value(k + 1, jj, t) for t in grid])
            def mix(mean):
                best = np.inf
                for a in range(len(grid)):
                    for b in range(a, len(grid)):
                        if grid[a] - 1e-12 <= mean <= grid[b] + 1e-12:
                            if a == b:
                                cand = vals[a]
                            else:
                                t = (mean - grid[a]) / (grid[b] - grid[a])
                                cand = (1 - t) * vals[a] + t * vals[b]
                            best = min(best, cand)
                return best
            return mix, cap, grid

        mix_u, cap_u, grid_u = child(j + 1)
        mix_d, cap_d, grid_d = child(j)
        cands = set()
        for g in grid_u:
            cands.add(min(float(g), w / q_u if q_u > 0 else 0.0))
        for g in grid_d:
            mu = (w - q_d * g) / q_u
            if -1e-12 <= mu:
                cands.add(min(max(mu, 0.0), cap_u))
        cands.add(min(cap_u, w / q_u))
        best = np.inf
        for mu in cands:
            if mu < -1e-12 or mu > cap_u + 1e-12:
                continue
            md = min(cap_d, max((w - q_u * mu) / q_d, 0.0))
            best = min(best, 0.5 * mix_u(mu) + 0.5 * mix_d(md))
        return float(best)

    return float(value(0, 0, x))
