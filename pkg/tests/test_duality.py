import numpy as np
import pytest

from gameshort.duality import (
    DualCurve,
    compute_F,
    compute_nu,
    default_lambda_grid,
    dual_curve,
    left_derivative_F,
    lower_bound_R,
)
from gameshort.experiments import counterexample_X, counterexample_payoff, nu_monte_carlo
from gameshort.market import ModelParams, build_lattice
from gameshort.shortfall import solve_shortfall

BENCH = ModelParams(1.0, 1.0, 1.0, 1.0)


@pytest.fixture(scope="module")
def bench_lattice():
    return build_lattice(BENCH, 200)


@pytest.fixture(scope="module")
def bench_curve(bench_lattice):
    X = counterexample_X(bench_lattice)
    return dual_curve(bench_lattice, X, default_lambda_grid())


def test_dual_flat_at_one_beyond_two(bench_lattice):
    # [DERIVED] F(lambda) = 1 for lambda >= 2 (exact on the lattice:
    # max(z, 1/2) * min(1, 2z) = z and the stopped density is a P-martingale)
    X = counterexample_X(bench_lattice)
    for lam in (2.0, 3.0, 10.0):
        val, _ = compute_F(bench_lattice, X, lam)
        assert val == pytest.approx(1.0, abs=1e-12)


def test_small_lambda_immediate_stop_bound(bench_lattice):
    X = counterexample_X(bench_lattice)
    for lam in (0.05, 0.2, 0.9):
        val, _ = compute_F(bench_lattice, X, lam)
        assert val <= min(1.0, lam) * X[0][0] + 1e-12
    with pytest.raises(ValueError):
        compute_F(bench_lattice, X, 0.0)


def test_curve_concave_nondecreasing(bench_curve):
    vals = bench_curve.values
    lams = bench_curve.lambdas
    assert np.all(np.diff(vals) >= -1e-12)
    slopes = np.diff(vals) / np.diff(lams)
    assert np.all(np.diff(slopes) <= 1e-6)


def test_left_derivative_at_two(bench_curve):
    nu = compute_nu(BENCH)
    slope = left_derivative_F(bench_curve, 2.0)
    assert slope >= nu - 0.01
    with pytest.raises(ValueError):
        left_derivative_F(bench_curve, 1.2345)


def test_compute_nu_closed_form_and_monte_carlo():
    nu1 = compute_nu(ModelParams(1.0, 1.0, 1.0, 1.0))
    assert nu1 == pytest.approx(0.0582, abs=5e-4)
    nu2 = compute_nu(ModelParams(1.0, 1.0, 2.0, 1.0))
    assert nu2 == pytest.approx(0.0446, abs=5e-4)
    assert compute_nu(ModelParams(1.0, 0.7, 0.0, 1.0)) == 0.0
    est, se = nu_monte_carlo(ModelParams(1.0, 1.0, 1.0, 1.0), samples=400_000, seed=1)
    assert abs(est - nu1) <= 3 * se


def test_lower_bound_examples(bench_curve):
    nu = compute_nu(BENCH)
    assert lower_bound_R(bench_curve, 0.0) == pytest.approx(1.0, abs=1e-12)
    assert lower_bound_R(bench_curve, 100.0) == 0.0
    assert lower_bound_R(bench_curve, nu / 2) == pytest.approx(1.0 - nu, abs=0.02)
    with pytest.raises(ValueError):
        lower_bound_R(bench_curve, -1.0)


def test_weak_duality_exact_on_lattice(bench_curve):
    # R_n(x) >= F_n(lambda) - lambda x for every sampled lambda, same lattice
    lat = build_lattice(BENCH, 50)
    X = counterexample_X(lat)
    curve = dual_curve(lat, X, default_lambda_grid())
    payoff = counterexample_payoff(lat)
    for x in (0.0, 0.01, 0.03, 0.05):
        risk = solve_shortfall(lat, payoff, x).risk
        bounds = curve.values - curve.lambdas * x
        assert risk >= np.max(bounds) - 1e-12


def test_dual_curve_validation():
    with pytest.raises(ValueError):
        DualCurve(np.array([1.0, 1.0]), np.array([0.5, 0.5]), ())
    with pytest.raises(ValueError):
        DualCurve(np.array([-1.0, 2.0]), np.array([0.5, 0.5]), ())


def test_compute_nu_rejects_bad_kappa():
    params = ModelParams.__new__(ModelParams)
    object.__setattr__(params, "s0", 1.0)
    object.__setattr__(params, "kappa", 0.0)
    object.__setattr__(params, "theta", 1.0)
    object.__setattr__(params, "horizon", 1.0)
    with pytest.raises(ValueError):
        compute_nu(params)
