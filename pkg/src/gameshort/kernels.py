"""Hot numeric kernels for the wealth-grid backward induction.

One level of the shortfall recursion does, per parent node:

1. merge the two children's convex slice segments in increasing slope
   order (exact minimizer of the budget-constrained transfer, for every
   budget simultaneously),
2. interpolate the merged continuation onto the parent wealth grid,
3. compose with the exercise/cancellation payoffs,
4. rebuild the lower convex hull of the composed slice.

Both a numba ``@njit`` implementation and a pure-numpy fallback are
provided; selection is via the ``GAMESHORT_NUMBA`` environment variable
(set to ``0`` to force the numpy path).  ``benchmarks/bench_kernels.py``
compares the two.
"""

from __future__ import annotations

import os

import numpy as np

_FLAG = os.environ.get("GAMESHORT_NUMBA", "1").strip().lower()
_WANT_NUMBA = _FLAG not in ("0", "false", "off", "no")

if _WANT_NUMBA:
    try:
        from numba import njit

        _HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a hard dep, belt and braces
        _HAVE_NUMBA = False
else:
    _HAVE_NUMBA = False

if not _HAVE_NUMBA:
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def deco(fn):
            return fn

        return deco


def backend_name() -> str:
    return "numba" if _HAVE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# numba path
# ---------------------------------------------------------------------------

@njit(cache=True)
def _backward_step_nb(child_vals, child_zmax, parent_zmax, q_up,
                      fv, gv, exercise, apply_min_g, pre, hull):
    C, m = child_vals.shape
    q_dn = 1.0 - q_up
    nseg = m - 1
    slopes = np.empty(2 * nseg)
    widths = np.empty(2 * nseg)
    stack = np.empty(m, np.int64)
    for par in range(C - 1):
        vu = child_vals[par + 1]
        vd = child_vals[par]
        wu = q_up * child_zmax[par + 1] / nseg
        wd = q_dn * child_zmax[par] / nseg
        hp = parent_zmax[par] / nseg
        cont0 = 0.5 * (vu[0] + vd[0])

        ns_u = nseg if wu > 0.0 else 0
        ns_d = nseg if wd > 0.0 else 0
        iu = 0
        idn = 0
        k = 0
        while iu < ns_u or idn < ns_d:
            su = 0.5 * (vu[iu + 1] - vu[iu]) / wu if iu < ns_u else 1e300
            sd = 0.5 * (vd[idn + 1] - vd[idn]) / wd if idn < ns_d else 1e300
            if su <= sd:
                slopes[k] = su
                widths[k] = wu
                iu += 1
            else:
                slopes[k] = sd
                widths[k] = wd
                idn += 1
            k += 1

        seg = 0
        w0 = 0.0
        v0 = cont0
        for t in range(m):
            target = t * hp
            while seg < k and target > w0 + widths[seg]:
                s = slopes[seg]
                if s > 0.0:
                    s = 0.0
                v0 += s * widths[seg]
                w0 += widths[seg]
                seg += 1
            if seg < k:
                s = slopes[seg]
                if s > 0.0:
                    s = 0.0
                c = v0 + s * (target - w0)
            else:
                c = v0
            if exercise:
                fp = fv[par] - target
                if fp < 0.0:
                    fp = 0.0
                if fp > c:
                    c = fp
                if apply_min_g:
                    gp = gv[par] - target
                    if gp < 0.0:
                        gp = 0.0
                    if gp < c:
                        c = gp
            pre[par, t] = c

        # lower convex hull of the composed row (uniform abscissae)
        row = pre[par]
        h = 0
        for i in range(m):
            while h >= 2:
                i1 = stack[h - 2]
                i2 = stack[h - 1]
                if (row[i] - row[i1]) * (i2 - i1) <= (row[i2] - row[i1]) * (i - i1):
                    h -= 1
                else:
                    break
            stack[h] = i
            h += 1
        for s2 in range(h - 1):
            i1 = stack[s2]
            i2 = stack[s2 + 1]
            v1 = row[i1]
            sl = (row[i2] - v1) / (i2 - i1)
            for i in range(i1, i2):
                hull[par, i] = v1 + sl * (i - i1)
        hull[par, m - 1] = row[m - 1]


# ---------------------------------------------------------------------------
# numpy fallback
# ---------------------------------------------------------------------------

def merge_breakpoints(vu, zu, vd, zd, q_up):
    """Continuation value as a piecewise-linear function of the budget.

    ``vu``/``vd`` are the children's convex slice values on uniform grids
    spanning ``[0, zu]`` / ``[0, zd]``; both children carry market weight
    1/2 under P and ``q_up`` / ``1 - q_up`` under Q.  Returns breakpoint
    arrays ``(w, v)``; beyond the last breakpoint the function is flat.
    """
    m = len(vu)
    nseg = m - 1
    q_dn = 1.0 - q_up
    wu = q_up * zu / nseg
    wd = q_dn * zd / nseg
    slopes = []
    widths = []
    if wu > 0.0:
        slopes.append(0.5 * np.diff(vu) / wu)
        widths.append(np.full(nseg, wu))
    if wd > 0.0:
        slopes.append(0.5 * np.diff(vd) / wd)
        widths.append(np.full(nseg, wd))
    cont0 = 0.5 * (vu[0] + vd[0])
    if not slopes:
        return np.array([0.0]), np.array([cont0])
    s = np.concatenate(slopes)
    w = np.concatenate(widths)
    order = np.argsort(s, kind="stable")
    s = np.minimum(s[order], 0.0)
    w = w[order]
    w_pts = np.concatenate(([0.0], np.cumsum(w)))
    v_pts = np.concatenate(([cont0], cont0 + np.cumsum(s * w)))
    return w_pts, v_pts


def continuation_at(vu, zu, vd, zd, q_up, budget):
    """Exact continuation value at one budget point (no grid resampling)."""
    w_pts, v_pts = merge_breakpoints(vu, zu, vd, zd, q_up)
    if budget >= w_pts[-1]:
        return float(v_pts[-1])
    return float(np.interp(budget, w_pts, v_pts))


def _hull_row_np(row: np.ndarray) -> np.ndarray:
    m = len(row)
    stack: list[int] = []
    for i in range(m):
        while len(stack) >= 2:
            i1, i2 = stack[-2], stack[-1]
            if (row[i] - row[i1]) * (i2 - i1) <= (row[i2] - row[i1]) * (i - i1):
                stack.pop()
            else:
                break
        stack.append(i)
    out = np.empty_like(row)
    for a, b in zip(stack[:-1], stack[1:]):
        out[a:b] = row[a] + (row[b] - row[a]) / (b - a) * np.arange(b - a)
    out[m - 1] = row[m - 1]
    return out


def _backward_step_np(child_vals, child_zmax, parent_zmax, q_up,
                      fv, gv, exercise, apply_min_g, pre, hull):
    C, m = child_vals.shape
    grid_frac = np.arange(m) / (m - 1)
    for par in range(C - 1):
        w_pts, v_pts = merge_breakpoints(
            child_vals[par + 1], child_zmax[par + 1],
            child_vals[par], child_zmax[par], q_up,
        )
        z = grid_frac * parent_zmax[par]
        c = np.interp(z, w_pts, v_pts)
        if exercise:
            c = np.maximum(c, np.maximum(fv[par] - z, 0.0))
            if apply_min_g:
                c = np.minimum(c, np.maximum(gv[par] - z, 0.0))
        pre[par] = c
        hull[par] = _hull_row_np(c)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def backward_step(child_vals, child_zmax, parent_zmax, q_up,
                  fv=None, gv=None, exercise=False, apply_min_g=True):
    """Run one backward level; returns (pre, hull) arrays of shape (C-1, m).

    ``pre`` is the composed slice (continuation merged with the exercise
    payoffs), ``hull`` its lower convex hull, both sampled on each parent's
    uniform wealth grid ``[0, parent_zmax[j]]``.
    """
    child_vals = np.ascontiguousarray(child_vals, dtype=float)
    C, m = child_vals.shape
    if fv is None:
        fv = np.zeros(C - 1)
    if gv is None:
        gv = np.zeros(C - 1)
    pre = np.empty((C - 1, m))
    hull = np.empty((C - 1, m))
    impl = _backward_step_nb if _HAVE_NUMBA else _backward_step_np
    impl(
        child_vals,
        np.ascontiguousarray(child_zmax, dtype=float),
        np.ascontiguousarray(parent_zmax, dtype=float),
        float(q_up),
        np.ascontiguousarray(fv, dtype=float),
        np.ascontiguousarray(gv, dtype=float),
        bool(exercise),
        bool(apply_min_g),
        pre,
        hull,
    )
    return pre, hull
