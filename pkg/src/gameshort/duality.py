"""Dual lower bounds for the shortfall risk.

For a cancellation payoff process X and multiplier lam > 0,

    F(lam) = inf over stopping times of E_P[ X * min(1, lam * Z) ]

bounds the risk from below: R(x) >= F(lam) - lam * x for every initial
capital x.  F is concave and nondecreasing; at multipliers where it is
differentiable the bound is tight at x = F'(lam).  The threshold
nu = (1/2) E_P[Z_1 1{Z_1 < 1/2}] has a closed form through the normal CDF
and controls the capital range on which the risk sits on the 1 - 2x line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynkin import StoppingRule, optimal_stop_inf
from .market import Lattice, ModelParams

__all__ = [
    "DualCurve",
    "compute_F",
    "dual_curve",
    "lower_bound_R",
    "compute_nu",
    "left_derivative_F",
    "default_lambda_grid",
]


@dataclass(frozen=True)
class DualCurve:
    lambdas: np.ndarray
    values: np.ndarray
    rules: tuple

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        val = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "values", val)
        if lam.ndim != 1 or val.shape != lam.shape:
            raise ValueError("lambdas and values must be 1-D arrays of equal length")
        if np.any(lam <= 0) or not np.all(np.diff(lam) > 0):
            raise ValueError("lambdas must be positive and strictly increasing")


def compute_F(lat: Lattice, payoff_X, lam: float):
    """Dual value and optimal stopping rule for one multiplier.

    ``payoff_X`` is the per-level sequence of cancellation payoffs; the
    reward stopped is ``X * min(1, lam * z)`` under the market measure,
    with stopping allowed at every level including 0.
    """
    if lam <= 0:
        raise ValueError(f"multiplier must be positive, got {lam}")
    reward = [
        np.asarray(payoff_X[k], dtype=float) * np.minimum(1.0, lam * lat.z[k])
        for k in range(lat.steps + 1)
    ]
    for k, r in enumerate(reward):
        if np.any(r < 0):
            raise ValueError(f"payoff_X must be nonnegative (level {k})")
    return optimal_stop_inf(lat, reward, allow_zero=True)


def default_lambda_grid(lo: float = 0.05, hi: float = 4.0, points: int = 64) -> np.ndarray:
    """Geometric grid with extra refinement near the kink at lam = 2."""
    base = np.geomspace(lo, hi, points - 16)
    refine = 2.0 + np.concatenate((-np.geomspace(1e-3, 0.25, 8)[::-1],
                                   np.geomspace(1e-3, 0.25, 8)))
    grid = np.unique(np.concatenate((base, refine, [2.0])))
    return grid


def dual_curve(lat: Lattice, payoff_X, lambdas) -> DualCurve:
    lambdas = np.asarray(lambdas, dtype=float)
    values = np.empty_like(lambdas)
    rules: list[StoppingRule] = []
    for i, lam in enumerate(lambdas):
        v, rule = compute_F(lat, payoff_X, float(lam))
        values[i] = v
        rules.append(rule)
    return DualCurve(lambdas, values, tuple(rules))


def lower_bound_R(curve: DualCurve, x: float) -> float:
    """Best sampled dual bound max(F(lam) - lam x, 0)."""
    if x < 0:
        raise ValueError("capital must be nonnegative")
    if len(curve.lambdas) == 0:
        raise ValueError("empty dual curve")
    return float(max(np.max(curve.values - curve.lambdas * x), 0.0))


def _norm_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def compute_nu(params: ModelParams) -> float:
    """Closed-form nu = (1/2) E_P[Z_1 1{Z_1 < 1/2}] over a unit time span.

    With a = theta/kappa the change of measure turns the truncated
    expectation into a Gaussian tail: nu = (1/2)(1 - Phi(ln2/|a| + |a|/2)).
    Zero drift makes Z identically 1, so nu = 0.
    """
    if params.kappa <= 0:
        raise ValueError("kappa must be positive")
    a = params.theta / params.kappa
    if a == 0.0:
        return 0.0
    a = abs(a)
    return 0.5 * (1.0 - _norm_cdf(math.log(2.0) / a + 0.5 * a))


def left_derivative_F(curve: DualCurve, at: float = 2.0) -> float:
    """Finite-difference slope of F from the left at ``at``.

    Uses the closest sample strictly below ``at``; the curve must contain
    ``at`` itself (within floating tolerance).
    """
    lam = curve.lambdas
    idx_at = np.where(np.isclose(lam, at, rtol=0, atol=1e-12))[0]
    if len(idx_at) == 0:
        raise ValueError(f"curve has no sample at lambda = {at}")
    below = np.where(lam < at - 1e-12)[0]
    if len(below) == 0:
        raise ValueError(f"curve has no samples below lambda = {at}")
    i = below[-1]
    j = idx_at[0]
    return float((curve.values[j] - curve.values[i]) / (lam[j] - lam[i]))
