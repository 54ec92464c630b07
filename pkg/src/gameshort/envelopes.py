"""Piecewise-linear functions, convex/concave envelopes, gap intervals.

The envelope of a sampled function is computed as the lower (upper) convex
hull of its knot set via a monotone chain.  Where the envelope differs from
the function it is affine on maximal open "gap" intervals; a value inside a
gap can be attained in expectation by a two-point mixture on the gap
endpoints, which is the discrete form of the randomization used to attain
the envelope.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PiecewiseLinearFn",
    "GapIntervals",
    "convex_envelope",
    "concave_envelope",
    "gap_intervals",
    "randomize_to_envelope",
]


@dataclass(frozen=True)
class PiecewiseLinearFn:
    """Sampled 1-D function: linear interpolation between strictly increasing knots."""

    knots: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)
        if knots.ndim != 1 or values.shape != knots.shape:
            raise ValueError("knots and values must be 1-D arrays of equal length")
        if len(knots) < 2:
            raise ValueError("need at least 2 knots")
        if not np.all(np.diff(knots) > 0):
            raise ValueError("knots must be strictly increasing")
        if not (np.all(np.isfinite(knots)) and np.all(np.isfinite(values))):
            raise ValueError("knots and values must be finite")

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.knots[0]), float(self.knots[-1])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.domain
        if np.any(x < lo) or np.any(x > hi):
            raise ValueError(f"evaluation outside domain [{lo}, {hi}]")
        out = np.interp(x, self.knots, self.values)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class GapIntervals:
    """Disjoint ordered open intervals (a, b) with endpoints among the knots."""

    intervals: tuple[tuple[float, float], ...]

    def locate(self, x: float) -> tuple[float, float] | None:
        for a, b in self.intervals:
            if a < x < b:
                return (a, b)
        return None


def _lower_hull_indices(x: np.ndarray, y: np.ndarray) -> list[int]:
    # monotone chain over points already sorted by x
    hull: list[int] = []
    for i in range(len(x)):
        while len(hull) >= 2:
            i1, i2 = hull[-2], hull[-1]
            # pop i2 if it lies on or above the chord (i1, i)
            if (y[i] - y[i1]) * (x[i2] - x[i1]) <= (y[i2] - y[i1]) * (x[i] - x[i1]):
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


def convex_envelope(f: PiecewiseLinearFn) -> PiecewiseLinearFn:
    """Greatest convex minorant of ``f`` on its domain.

    The output knots are the lower-hull vertices, a subset of the input
    knots; the envelope agrees with ``f`` at both domain endpoints.
    """
    idx = _lower_hull_indices(f.knots, f.values)
    return PiecewiseLinearFn(f.knots[idx], f.values[idx])


def concave_envelope(f: PiecewiseLinearFn) -> PiecewiseLinearFn:
    """Least concave majorant, via the mirror identity with the convex hull."""
    neg = PiecewiseLinearFn(f.knots, -f.values)
    env = convex_envelope(neg)
    return PiecewiseLinearFn(env.knots, -env.values)


def gap_intervals(f: PiecewiseLinearFn, env: PiecewiseLinearFn,
                  tol: float = 1e-12) -> GapIntervals:
    """Maximal knot-delimited open intervals where ``env`` differs from ``f``.

    ``env`` must be an envelope of ``f`` on the same span.  A knot where the
    two agree (within ``tol`` relative to the value scale) splits candidate
    gaps, matching the open-set structure of the difference region.
    """
    if f.domain != env.domain:
        raise ValueError(f"mismatched spans {f.domain} vs {env.domain}")
    env_at = env(f.knots)
    scale = max(1.0, float(np.max(np.abs(f.values))))
    differ = np.abs(env_at - f.values) > tol * scale
    intervals = []
    start = None
    for i in range(len(f.knots)):
        if differ[i]:
            if start is None:
                start = i - 1  # envelope touches f at the previous knot
        else:
            if start is not None:
                intervals.append((float(f.knots[start]), float(f.knots[i])))
                start = None
    if start is not None:
        # cannot happen for a true envelope (touches f at the right endpoint)
        intervals.append((float(f.knots[start]), float(f.knots[-1])))
    return GapIntervals(tuple(intervals))


def randomize_to_envelope(lambda_val: float, gap: tuple[float, float]):
    """Two-point mixture on the gap endpoints with mean ``lambda_val``.

    Returns ``((b, p), (a, 1 - p))`` with ``p = (lambda_val - a) / (b - a)``;
    for any function affine on ``[a, b]`` the mixture expectation equals the
    function value at ``lambda_val``.
    """
    a, b = gap
    if not (a < lambda_val < b):
        raise ValueError(f"lambda_val {lambda_val} outside open interval ({a}, {b})")
    p = (lambda_val - a) / (b - a)
    return ((b, p), (a, 1.0 - p))
