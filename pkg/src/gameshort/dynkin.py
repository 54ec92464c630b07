"""Zero-sum stopping-game valuation on the lattice.

For a fixed wealth plan the seller/buyer game value solves the backward
recursion

    psi_k = min((X_k - V_k)^+, max((Y_k - V_k)^+, E_P[psi_{k+1} | node]))

at exercise levels, with ``psi_n = (Y_n - V_n)^+`` at maturity.  The same
recursion under the martingale measure with raw payoffs (no wealth) gives
the perfect-hedging price of the claim, which also caps the wealth grids
of the shortfall solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .market import Lattice

__all__ = [
    "GamePayoff",
    "StoppingRule",
    "shortfall_game_value",
    "game_price_Q",
    "q_value_levels",
    "optimal_stop_inf",
]


@dataclass(frozen=True)
class GamePayoff:
    """Exercise set and per-node payoffs for buyer (f) and seller (g).

    ``buyer[k]`` / ``seller[k]`` are arrays over the ``k + 1`` nodes of
    level ``k``; levels outside ``exercise_levels`` are never stopped at
    and their payoff entries are ignored.  ``allow_cancel_at_zero`` drops
    the seller's cancellation right at level 0 (the variant where stopping
    at time zero is excluded) while keeping one code path.
    """

    exercise_levels: frozenset
    buyer: tuple
    seller: tuple
    allow_cancel_at_zero: bool = True

    def __post_init__(self):
        levels = frozenset(int(k) for k in self.exercise_levels)
        object.__setattr__(self, "exercise_levels", levels)
        n = len(self.buyer) - 1
        if len(self.seller) != n + 1:
            raise ValueError("buyer and seller payoff tables must cover the same levels")
        if 0 not in levels or n not in levels:
            raise ValueError("exercise set must contain level 0 and the maturity level")
        for k in range(n + 1):
            f = np.asarray(self.buyer[k], dtype=float)
            g = np.asarray(self.seller[k], dtype=float)
            if f.shape != (k + 1,) or g.shape != (k + 1,):
                raise ValueError(f"payoff arrays at level {k} must have length {k + 1}")
            if not (np.all(np.isfinite(f)) and np.all(np.isfinite(g))):
                raise ValueError(f"non-finite payoff at level {k}")
            if np.any(f < 0):
                raise ValueError(f"buyer payoff must be nonnegative (level {k})")
            if np.any(g < f):
                raise ValueError(f"seller payoff below buyer payoff at level {k}")

    @property
    def maturity(self) -> int:
        return len(self.buyer) - 1


@dataclass(frozen=True)
class StoppingRule:
    """Stop/continue decision per node for one player (first-hitting semantics)."""

    stops: tuple

    def stop_at(self, k: int, j: int) -> bool:
        return bool(self.stops[k][j])


def _check_match(lat: Lattice, payoff: GamePayoff) -> None:
    if payoff.maturity != lat.steps:
        raise ValueError(
            f"payoff has maturity level {payoff.maturity}, lattice has {lat.steps} steps"
        )


def _wealth_levels(lat: Lattice, wealth) -> list[np.ndarray]:
    out = []
    if len(wealth) != lat.steps + 1:
        raise ValueError(f"wealth must have {lat.steps + 1} levels, got {len(wealth)}")
    for k in range(lat.steps + 1):
        v = np.asarray(wealth[k], dtype=float)
        if v.shape != (k + 1,):
            raise ValueError(f"wealth missing or misshapen at level {k}")
        out.append(v)
    return out


def shortfall_game_value(lat: Lattice, payoff: GamePayoff, wealth):
    """Game value of the shortfall kernel for a fixed per-node wealth plan.

    Returns ``(psi0, seller_rule, buyer_rule)``.  Stopping rules resolve
    ties toward stopping, matching the first-hitting convention.
    """
    _check_match(lat, payoff)
    v = _wealth_levels(lat, wealth)
    n = lat.steps
    seller_stop: list[np.ndarray] = [None] * (n + 1)
    buyer_stop: list[np.ndarray] = [None] * (n + 1)

    fv = np.maximum(payoff.buyer[n] - v[n], 0.0)
    psi = fv
    seller_stop[n] = np.ones(n + 1, dtype=bool)
    buyer_stop[n] = np.ones(n + 1, dtype=bool)
    for k in range(n - 1, -1, -1):
        cont = 0.5 * (psi[1:] + psi[:-1])
        if k in payoff.exercise_levels:
            fp = np.maximum(payoff.buyer[k] - v[k], 0.0)
            gp = np.maximum(payoff.seller[k] - v[k], 0.0)
            psi = np.maximum(fp, cont)
            if k > 0 or payoff.allow_cancel_at_zero:
                psi = np.minimum(gp, psi)
                seller_stop[k] = psi == gp
            else:
                seller_stop[k] = np.zeros(k + 1, dtype=bool)
            # first-hitting convention against the final level value
            buyer_stop[k] = psi == fp
        else:
            psi = cont
            seller_stop[k] = np.zeros(k + 1, dtype=bool)
            buyer_stop[k] = np.zeros(k + 1, dtype=bool)
    return (
        float(psi[0]),
        StoppingRule(tuple(seller_stop)),
        StoppingRule(tuple(buyer_stop)),
    )


def q_value_levels(lat: Lattice, payoff: GamePayoff) -> list[np.ndarray]:
    """Per-node value of the remaining game under the martingale measure.

    This is the perfect-hedging price seen from each node and the upper
    endpoint of the node's wealth grid in the shortfall solver.
    """
    _check_match(lat, payoff)
    n = lat.steps
    q = lat.q_up
    vals: list[np.ndarray] = [None] * (n + 1)
    vals[n] = np.asarray(payoff.buyer[n], dtype=float).copy()
    for k in range(n - 1, -1, -1):
        cont = q * vals[k + 1][1:] + (1.0 - q) * vals[k + 1][:-1]
        if k in payoff.exercise_levels:
            cont = np.maximum(payoff.buyer[k], cont)
            if k > 0 or payoff.allow_cancel_at_zero:
                cont = np.minimum(payoff.seller[k], cont)
        vals[k] = cont
    return vals


def game_price_Q(lat: Lattice, payoff: GamePayoff) -> float:
    """Perfect-hedging price: value of the stopping game under Q."""
    return float(q_value_levels(lat, payoff)[0][0])


def optimal_stop_inf(lat: Lattice, reward, allow_zero: bool = True):
    """Minimal expected stopped reward under P over all stopping times.

    ``reward`` is a per-level sequence of node arrays.  With
    ``allow_zero=False`` level 0 is forced to continue.  Returns
    ``(value, rule)``; ties resolve to stopping.
    """
    n = lat.steps
    r = [np.asarray(reward[k], dtype=float) for k in range(n + 1)]
    for k, arr in enumerate(r):
        if arr.shape != (k + 1,) or not np.all(np.isfinite(arr)):
            raise ValueError(f"reward invalid at level {k}")
    stops: list[np.ndarray] = [None] * (n + 1)
    val = r[n].copy()
    stops[n] = np.ones(n + 1, dtype=bool)
    for k in range(n - 1, -1, -1):
        cont = 0.5 * (val[1:] + val[:-1])
        if k == 0 and not allow_zero:
            val = cont
            stops[k] = np.zeros(1, dtype=bool)
        else:
            val = np.minimum(r[k], cont)
            stops[k] = val == r[k]
    return float(val[0]), StoppingRule(tuple(stops))
