import numpy as np
import pytest

from gameshort.dynkin import (
    GamePayoff,
    game_price_Q,
    optimal_stop_inf,
    q_value_levels,
    shortfall_game_value,
)
from gameshort.market import ModelParams, build_lattice
from gameshort.oracles import game_value_enum, q_game_value_enum, stop_inf_enum


def small_lattice(steps=2, seed=None):
    return build_lattice(ModelParams(1.0, 0.5, 0.1, 1.0), steps)


def random_instance(rng, steps=None):
    n = steps if steps is not None else int(rng.integers(1, 4))
    kappa = float(rng.uniform(0.2, 0.8))
    theta = kappa * float(rng.uniform(-0.4, 0.4))
    lat = build_lattice(ModelParams(1.0, kappa, theta, 1.0), n)
    buyer, seller = [], []
    for k in range(n + 1):
        f = rng.uniform(0.0, 1.5, k + 1)
        g = f + rng.uniform(0.0, 1.0, k + 1)
        buyer.append(tuple(f))
        seller.append(tuple(g))
    payoff = GamePayoff(
        exercise_levels=frozenset(range(n + 1)),
        buyer=tuple(buyer),
        seller=tuple(seller),
        allow_cancel_at_zero=bool(rng.integers(0, 2)),
    )
    return lat, payoff


def zero_wealth(n):
    return [np.zeros(k + 1) for k in range(n + 1)]


def test_zero_penalty_stops_immediately():
    # [TRIVIAL] X = Y makes the game value the immediate payoff
    lat = small_lattice(2)
    vals = [(0.4,), (0.1, 0.8), (0.0, 0.5, 1.2)]
    payoff = GamePayoff(frozenset({0, 1, 2}), tuple(vals), tuple(vals))
    psi0, seller_rule, buyer_rule = shortfall_game_value(lat, payoff, zero_wealth(2))
    assert psi0 == pytest.approx(0.4, abs=1e-15)
    assert seller_rule.stop_at(0, 0) and buyer_rule.stop_at(0, 0)


def test_two_level_hand_example():
    # [DERIVED] Y_0 = 0, X_0 = 1, terminal Y in {0, 2} with P-weights 1/2
    lat = build_lattice(ModelParams(1.0, 0.5, 0.125, 1.0), 1)
    payoff = GamePayoff(frozenset({0, 1}), ((0.0,), (0.0, 2.0)), ((1.0,), (0.0, 2.0)))
    psi0, *_ = shortfall_game_value(lat, payoff, zero_wealth(1))
    assert psi0 == pytest.approx(1.0, abs=1e-15)
    infsup, supinf = game_value_enum(lat, payoff)
    assert infsup == pytest.approx(1.0, abs=1e-15)
    assert supinf == pytest.approx(1.0, abs=1e-15)


def test_saddle_on_random_small_trees():
    # [DERIVED] inf-sup = sup-inf = recursion value by enumeration, n <= 3
    rng = np.random.default_rng(5)
    for _ in range(25):
        lat, payoff = random_instance(rng)
        wealth = [rng.uniform(0.0, 1.0, k + 1) for k in range(lat.steps + 1)]
        psi0, *_ = shortfall_game_value(lat, payoff, wealth)
        infsup, supinf = game_value_enum(lat, payoff, wealth=wealth)
        assert infsup == pytest.approx(supinf, abs=1e-12)
        assert psi0 == pytest.approx(infsup, abs=1e-12)


def test_monotone_in_wealth_and_immediate_bound():
    rng = np.random.default_rng(6)
    for _ in range(20):
        lat, payoff = random_instance(rng)
        wealth = [rng.uniform(0.0, 1.0, k + 1) for k in range(lat.steps + 1)]
        bumped = [w + rng.uniform(0.0, 0.5, len(w)) for w in wealth]
        psi, *_ = shortfall_game_value(lat, payoff, wealth)
        psi_up, *_ = shortfall_game_value(lat, payoff, bumped)
        assert psi_up <= psi + 1e-12
        if payoff.allow_cancel_at_zero:
            assert psi <= max(payoff.seller[0][0] - wealth[0][0], 0.0) + 1e-12


def test_price_constant_claim_and_enumeration():
    lat = small_lattice(2)
    const = tuple(tuple(np.full(k + 1, 0.3)) for k in range(3))
    payoff = GamePayoff(frozenset({0, 1, 2}), const, const)
    assert game_price_Q(lat, payoff) == pytest.approx(0.3, abs=1e-15)
    rng = np.random.default_rng(7)
    for _ in range(15):
        lat, payoff = random_instance(rng, steps=2)
        assert game_price_Q(lat, payoff) == pytest.approx(
            q_game_value_enum(lat, payoff), abs=1e-12
        )


def test_price_sandwich():
    # fixing one player's rule at "wait until maturity" brackets the price:
    # inf_sigma E_Q[X before maturity, Y at maturity] <= price <= sup_tau E_Q[Y_tau]
    # (the converse ordering claimed in some write-ups fails for general
    # payoffs; see the decisions ledger)
    rng = np.random.default_rng(8)
    for _ in range(10):
        lat, payoff = random_instance(rng, steps=3)
        q = lat.q_up
        terminal = np.asarray(payoff.buyer[lat.steps], dtype=float)
        buyer_snell = terminal.copy()   # sup_tau E_Q[Y_tau]
        seller_snell = terminal.copy()  # inf_sigma with forced settlement Y_n
        for k in range(lat.steps - 1, -1, -1):
            cont_b = q * buyer_snell[1:] + (1 - q) * buyer_snell[:-1]
            cont_s = q * seller_snell[1:] + (1 - q) * seller_snell[:-1]
            buyer_snell = np.maximum(payoff.buyer[k], cont_b)
            allowed = k > 0 or payoff.allow_cancel_at_zero
            seller_snell = np.minimum(payoff.seller[k], cont_s) if allowed else cont_s
        price = game_price_Q(lat, payoff)
        assert seller_snell[0] - 1e-12 <= price <= buyer_snell[0] + 1e-12


def test_q_value_levels_match_per_node_enumeration():
    rng = np.random.default_rng(9)
    lat, payoff = random_instance(rng, steps=2)
    vals = q_value_levels(lat, payoff)
    for k in range(lat.steps + 1):
        for j in range(k + 1):
            assert vals[k][j] == pytest.approx(
                q_game_value_enum(lat, payoff, start=(k, j)), abs=1e-12
            )


def test_optimal_stop_inf_examples():
    lat = small_lattice(3)
    const = [np.full(k + 1, 0.7) for k in range(4)]
    val, rule = optimal_stop_inf(lat, const)
    assert val == pytest.approx(0.7, abs=1e-15)
    assert rule.stop_at(0, 0)
    # a P-martingale reward: optional stopping makes every rule equal
    mart = [np.asarray(lat.z[k]) for k in range(4)]
    val, _ = optimal_stop_inf(lat, mart)
    assert val == pytest.approx(1.0, abs=1e-12)
    rng = np.random.default_rng(10)
    for _ in range(10):
        lat2 = build_lattice(ModelParams(1.0, 0.5, 0.1, 1.0), int(rng.integers(1, 4)))
        reward = [rng.uniform(0.0, 2.0, k + 1) for k in range(lat2.steps + 1)]
        for allow_zero in (True, False):
            val, rule = optimal_stop_inf(lat2, reward, allow_zero=allow_zero)
            assert val == pytest.approx(
                stop_inf_enum(lat2, reward, allow_zero=allow_zero), abs=1e-12
            )
            assert rule.stop_at(lat2.steps, 0)
            if not allow_zero:
                assert not rule.stop_at(0, 0)


def test_tie_resolves_to_stop():
    # continuation equals the immediate reward; the rule must stop
    lat = build_lattice(ModelParams(1.0, 0.5, 0.125, 1.0), 1)
    reward = [np.array([1.0]), np.array([1.0, 1.0])]
    _, rule = optimal_stop_inf(lat, reward)
    assert rule.stop_at(0, 0)


def test_payoff_validation():
    with pytest.raises(ValueError, match="seller payoff below"):
        GamePayoff(frozenset({0, 1}), ((1.0,), (0.0, 0.0)), ((0.5,), (0.0, 0.0)))
    with pytest.raises(ValueError, match="nonnegative"):
        GamePayoff(frozenset({0, 1}), ((-1.0,), (0.0, 0.0)), ((0.0,), (0.0, 0.0)))
    with pytest.raises(ValueError, match="exercise set"):
        GamePayoff(frozenset({1}), ((0.0,), (0.0, 0.0)), ((0.0,), (0.0, 0.0)))
    with pytest.raises(ValueError, match="level 1"):
        GamePayoff(frozenset({0, 1}), ((0.0,), (0.0,)), ((0.0,), (0.0,)))
    lat = small_lattice(2)
    payoff = GamePayoff(
        frozenset({0, 1, 2}),
        tuple(tuple(np.zeros(k + 1)) for k in range(3)),
        tuple(tuple(np.ones(k + 1)) for k in range(3)),
    )
    with pytest.raises(ValueError, match="wealth"):
        shortfall_game_value(lat, payoff, [np.zeros(1), np.zeros(2)])
