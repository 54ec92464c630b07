import math

import numpy as np
import pytest

from gameshort.market import (
    Lattice,
    LatticeError,
    ModelParams,
    build_lattice,
    dump_nodes_csv,
    level_weights,
    terminal_distribution,
)


def test_one_step_factors_hand_check():
    # [DERIVED] closed-form factor formulas at s0=100, kappa=0.2, theta=0, T=1
    lat = build_lattice(ModelParams(s0=100.0, kappa=0.2, theta=0.0, horizon=1.0), 1)
    assert lat.u == pytest.approx(math.exp(0.18), abs=1e-15)
    assert lat.d == pytest.approx(math.exp(-0.22), abs=1e-15)
    assert lat.u == pytest.approx(1.1972, abs=1e-4)
    assert lat.d == pytest.approx(0.8025, abs=1e-4)
    assert lat.q_up == pytest.approx(0.5004, abs=1e-4)
    assert lat.p_up == 0.5
    np.testing.assert_allclose(lat.stock[1], [100 * lat.d, 100 * lat.u])


@pytest.mark.parametrize("params,steps", [
    (ModelParams(100.0, 0.2, 0.0, 1.0), 5),
    (ModelParams(1.0, 1.0, 1.0, 1.0), 12),
    (ModelParams(2.5, 0.6, -0.2, 0.7), 9),
])
def test_q_martingale_identity_exact(params, steps):
    # [TRIVIAL] sum of q-weighted child stocks reproduces the parent exactly
    lat = build_lattice(params, steps)
    assert lat.q_up * lat.u + (1 - lat.q_up) * lat.d == pytest.approx(1.0, abs=1e-14)
    for k in range(steps):
        parent = lat.stock[k]
        child_mix = lat.q_up * lat.stock[k + 1][1:] + (1 - lat.q_up) * lat.stock[k + 1][:-1]
        np.testing.assert_allclose(child_mix, parent, rtol=1e-13)


@pytest.mark.parametrize("params,steps", [
    (ModelParams(100.0, 0.2, 0.0, 1.0), 30),
    (ModelParams(1.0, 1.0, 1.0, 1.0), 25),
    (ModelParams(1.0, 0.4, 0.1, 2.0), 40),
])
def test_density_mean_one_every_level(params, steps):
    # [TRIVIAL] telescoping identity E_P[z at level k] = 1
    lat = build_lattice(params, steps)
    for k in range(steps + 1):
        p_w, q_w = level_weights(lat, k)
        assert float(p_w @ lat.z[k]) == pytest.approx(1.0, abs=1e-12)
        assert float(p_w.sum()) == pytest.approx(1.0, abs=1e-12)
        assert float(q_w.sum()) == pytest.approx(1.0, abs=1e-12)


def test_change_of_measure_identity():
    # E_P[z G(stock)] = E_Q[G(stock)] for arbitrary terminal G
    lat = build_lattice(ModelParams(1.0, 0.5, 0.2, 1.0), 8)
    stock, z, p_w, q_w = terminal_distribution(lat)
    rng = np.random.default_rng(0)
    for _ in range(5):
        g = rng.uniform(-2.0, 2.0, len(stock))
        assert float(p_w @ (z * g)) == pytest.approx(float(q_w @ g), abs=1e-12)


def test_terminal_distribution_small():
    lat1 = build_lattice(ModelParams(1.0, 0.3, 0.0, 1.0), 1)
    _, _, p_w, _ = terminal_distribution(lat1)
    np.testing.assert_allclose(p_w, [0.5, 0.5], atol=1e-15)
    lat2 = build_lattice(ModelParams(1.0, 0.3, 0.0, 1.0), 2)
    _, z2, p_w2, _ = terminal_distribution(lat2)
    assert p_w2[1] == pytest.approx(0.5, abs=1e-15)
    assert float(p_w2 @ z2) == pytest.approx(1.0, abs=1e-12)


def test_nu_estimate_from_lattice():
    # [DERIVED] (1/2) E_P[z 1{z<1/2}] ~ 0.0582 at kappa = theta = 1, n = 500
    lat = build_lattice(ModelParams(1.0, 1.0, 1.0, 1.0), 500)
    _, z, p_w, _ = terminal_distribution(lat)
    est = 0.5 * float(p_w @ (z * (z < 0.5)))
    assert est == pytest.approx(0.0582, abs=0.005)


def test_weak_convergence_of_mean_stock():
    params = ModelParams(1.0, 0.2, 0.05, 1.0)
    lat = build_lattice(params, 500)
    _, _, p_w, _ = terminal_distribution(lat)
    mean = float(p_w @ lat.stock[-1])
    target = params.s0 * math.exp(params.theta * params.horizon)
    assert abs(mean - target) / target <= 0.005


def test_invalid_parameters_rejected():
    with pytest.raises(LatticeError):
        ModelParams(0.0, 0.2, 0.0, 1.0)
    with pytest.raises(LatticeError):
        ModelParams(1.0, -0.2, 0.0, 1.0)
    with pytest.raises(LatticeError):
        ModelParams(1.0, 0.2, 0.0, 0.0)
    with pytest.raises(LatticeError):
        build_lattice(ModelParams(1.0, 0.2, 0.0, 1.0), 0)


def test_degenerate_factors_report_offender():
    # huge positive drift pushes d above 1
    with pytest.raises(LatticeError, match="down factor"):
        build_lattice(ModelParams(1.0, 0.1, 5.0, 1.0), 1)
    # huge negative drift pushes u below 1
    with pytest.raises(LatticeError, match="up factor"):
        build_lattice(ModelParams(1.0, 0.1, -5.0, 1.0), 1)


def test_density_is_path_product(tmp_path):
    lat = build_lattice(ModelParams(1.0, 0.8, 0.3, 1.0), 6)
    lr_up, lr_dn = 2 * lat.q_up, 2 * (1 - lat.q_up)
    for k in range(lat.steps + 1):
        for j in range(k + 1):
            assert lat.z[k][j] == pytest.approx(lr_up**j * lr_dn ** (k - j), rel=1e-13)
    out = tmp_path / "nodes.csv"
    dump_nodes_csv(lat, out)
    lines = out.read_text().splitlines()
    assert lines[0] == "k,j,t,stock,z,p_up,q_up"
    assert len(lines) == 1 + sum(k + 1 for k in range(lat.steps + 1))
