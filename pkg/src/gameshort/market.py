"""Binomial approximation of the Black-Scholes market.

The discretization keeps the market exactly complete: every one-step
submarket has two states and a unique risk-neutral up-probability, so any
terminal claim has a unique replication cost.  The state-price density is
stored per node as the exact product of per-move likelihood ratios, which
makes the change of measure an identity rather than an approximation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "LatticeError",
    "ModelParams",
    "Lattice",
    "build_lattice",
    "terminal_distribution",
    "dump_nodes_csv",
]


class LatticeError(ValueError):
    """Raised when market parameters cannot produce a valid lattice."""


@dataclass(frozen=True)
class ModelParams:
    """Constant-coefficient market: spot, volatility, drift, horizon."""

    s0: float
    kappa: float
    theta: float
    horizon: float

    def __post_init__(self):
        if not (self.s0 > 0):
            raise LatticeError(f"s0 must be positive, got {self.s0}")
        if not (self.kappa > 0):
            raise LatticeError(f"kappa must be positive, got {self.kappa}")
        if not (self.horizon > 0):
            raise LatticeError(f"horizon must be positive, got {self.horizon}")


@dataclass(frozen=True)
class Lattice:
    """Recombining binomial lattice.

    Level ``k`` holds ``k + 1`` nodes indexed by the number of up moves
    ``j``.  ``stock[k][j]`` is the asset price, ``z[k][j]`` the state-price
    density (product of per-move ``q/p`` factors along any path to the
    node; recombination makes it a function of ``(k, j)`` only).
    """

    params: ModelParams
    steps: int
    dt: float
    u: float
    d: float
    p_up: float
    q_up: float
    stock: tuple[np.ndarray, ...]
    z: tuple[np.ndarray, ...]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.dt

    def level_time(self, k: int) -> float:
        return k * self.dt


def build_lattice(params: ModelParams, steps: int) -> Lattice:
    """Build the lattice for ``params`` with ``steps`` periods.

    Up/down factors follow a symmetric +-sqrt(dt) random walk for the
    Brownian driver under the market measure (p_up = 1/2); the martingale
    up-probability is q_up = (1 - d) / (u - d).
    """
    if steps < 1:
        raise LatticeError(f"steps must be >= 1, got {steps}")
    dt = params.horizon / steps
    drift = (params.theta - 0.5 * params.kappa**2) * dt
    u = math.exp(params.kappa * math.sqrt(dt) + drift)
    d = math.exp(-params.kappa * math.sqrt(dt) + drift)
    if u <= 1.0:
        raise LatticeError(f"up factor u={u:.6g} <= 1; reduce dt or drift magnitude")
    if d >= 1.0:
        raise LatticeError(f"down factor d={d:.6g} >= 1; reduce dt or drift magnitude")
    q_up = (1.0 - d) / (u - d)

    # per-move likelihood ratios q/p with p = 1/2
    lr_up = 2.0 * q_up
    lr_dn = 2.0 * (1.0 - q_up)
    stock = []
    z = []
    for k in range(steps + 1):
        j = np.arange(k + 1)
        stock.append(params.s0 * u**j * d ** (k - j))
        z.append(lr_up**j * lr_dn ** (k - j))
    return Lattice(
        params=params,
        steps=steps,
        dt=dt,
        u=u,
        d=d,
        p_up=0.5,
        q_up=q_up,
        stock=tuple(stock),
        z=tuple(z),
    )


def _log_binom(n: int, j: np.ndarray) -> np.ndarray:
    return (
        math.lgamma(n + 1)
        - np.vectorize(math.lgamma)(j + 1.0)
        - np.vectorize(math.lgamma)(n - j + 1.0)
    )


def terminal_distribution(lat: Lattice):
    """Terminal stock values with density and weights under both measures.

    Returns arrays ``(stock, z, p_weight, q_weight)`` over the ``n + 1``
    terminal nodes; each weight vector sums to one.
    """
    n = lat.steps
    j = np.arange(n + 1)
    logc = _log_binom(n, j)
    p_w = np.exp(logc - n * math.log(2.0))
    q_w = np.exp(logc + j * math.log(lat.q_up) + (n - j) * math.log(1.0 - lat.q_up))
    return lat.stock[n], lat.z[n], p_w, q_w


def level_weights(lat: Lattice, k: int):
    """P- and Q-weights of the nodes at level ``k``."""
    j = np.arange(k + 1)
    logc = _log_binom(k, j) if k > 0 else np.zeros(1)
    p_w = np.exp(logc - k * math.log(2.0)) if k > 0 else np.ones(1)
    q_w = (
        np.exp(logc + j * math.log(lat.q_up) + (k - j) * math.log(1.0 - lat.q_up))
        if k > 0
        else np.ones(1)
    )
    return p_w, q_w


def dump_nodes_csv(lat: Lattice, path) -> None:
    """Debug dump of the node table (k, j, t, stock, z, p_up, q_up)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "j", "t", "stock", "z", "p_up", "q_up"])
        for k in range(lat.steps + 1):
            t = lat.level_time(k)
            for j in range(k + 1):
                w.writerow(
                    [k, j, f"{t:.12g}", f"{lat.stock[k][j]:.12g}",
                     f"{lat.z[k][j]:.12g}", f"{lat.p_up:.12g}", f"{lat.q_up:.12g}"]
                )
