import math

import numpy as np
import pytest

from risk_sensitive_portfolio.errors import SimulationError
from risk_sensitive_portfolio.mc import (
    correlated_increments,
    estimate_hara,
    estimate_J,
    girsanov_weight,
    simulate_original,
    simulate_reduced,
)
from risk_sensitive_portfolio.models import MarketParams, Measure, SimConfig
from risk_sensitive_portfolio.policy import ConstantPolicy, FeedbackPolicy, ZeroPolicy
from risk_sensitive_portfolio.rng import block_normals, path_stream
from risk_sensitive_portfolio.riccati import solve

REFERENCE = MarketParams()
SMALL = SimConfig(n_paths=2000, n_steps=100, seed=42)
N_INCREMENTS = 1_000_000


def test_path_streams_are_reproducible():
    first = path_stream(7, 3).standard_normal(5)
    again = path_stream(7, 3).standard_normal(5)
    other = path_stream(7, 4).standard_normal(5)
    np.testing.assert_array_equal(first, again)
    assert not np.array_equal(first, other)
    block = block_normals(7, 2, 5, 4)
    np.testing.assert_array_equal(block[1].ravel()[:5], first)


def test_perfect_correlation_is_bit_exact():
    dw1, dw2 = correlated_increments(1.0, 0.01, path_stream(0, 0), size=1000)
    np.testing.assert_array_equal(dw1, dw2)


@pytest.mark.parametrize("rho", [0.0, 0.2])
def test_increment_correlation(rho):
    dw1, dw2 = correlated_increments(rho, 1e-3, path_stream(1, 0), size=N_INCREMENTS)
    sample = np.corrcoef(dw1, dw2)[0, 1]
    assert abs(sample - rho) < 3.0 * (1.0 - rho**2) / math.sqrt(N_INCREMENTS) + 1e-12


@pytest.mark.parametrize("rho", [-0.9, 0.0, 0.5])
def test_increment_covariance(rho):
    dt = 1e-2
    dw1, dw2 = correlated_increments(rho, dt, path_stream(2, 0), size=N_INCREMENTS)
    cov = np.cov(dw1, dw2)
    var_se = dt * math.sqrt(2.0 / N_INCREMENTS)
    cov_se = dt * math.sqrt((1.0 + rho**2) / N_INCREMENTS)
    assert abs(cov[0, 0] - dt) < 3 * var_se
    assert abs(cov[1, 1] - dt) < 3 * var_se
    assert abs(cov[0, 1] - rho * dt) < 3 * cov_se


def test_blocks_and_threads_do_not_change_results():
    policy = FeedbackPolicy(REFERENCE, solve(REFERENCE, n_grid=200))
    serial = simulate_reduced(REFERENCE, policy, SMALL.model_copy(update={"n_paths": 300}))
    threaded = simulate_reduced(
        REFERENCE,
        policy,
        SMALL.model_copy(update={"n_paths": 300, "block_size": 64, "workers": 3}),
    )
    np.testing.assert_array_equal(serial.integrals, threaded.integrals)
    np.testing.assert_array_equal(serial.terminal_state, threaded.terminal_state)


def test_zero_control_criterion_is_deterministic():
    estimate = estimate_J(REFERENCE, ZeroPolicy(), SMALL)
    assert estimate.mean == pytest.approx(math.exp(REFERENCE.gamma * REFERENCE.r), abs=1e-12)
    assert estimate.std_error < 1e-12


def test_zero_control_hara_value():
    cfg = SMALL.model_copy(update={"measure": Measure.P_TILDE})
    estimate = estimate_hara(REFERENCE, ZeroPolicy(), cfg)
    assert estimate.mean == pytest.approx(2.0 * math.exp(0.025), abs=1e-12)
    assert estimate.mean == pytest.approx(2.0506, abs=1e-4)
    assert estimate.std_error < 1e-12
    assert estimate.excluded == 0


def test_zero_control_wealth_compounds_riskless():
    params = REFERENCE.model_copy(update={"x0": 2.0})
    cfg = SimConfig(n_paths=50, n_steps=100, measure=Measure.P_TILDE, record_paths=True)
    ensemble = simulate_original(params, ZeroPolicy(), cfg)
    expected = 2.0 * np.exp(params.r * ensemble.times)
    np.testing.assert_allclose(ensemble.wealth, np.broadcast_to(expected, (50, 101)), rtol=1e-12)


def test_full_stock_wealth_tracks_price():
    cfg = SimConfig(n_paths=50, n_steps=200, measure=Measure.P_TILDE)
    ensemble = simulate_original(REFERENCE, ConstantPolicy(1.0), cfg)
    growth = ensemble.terminal_state - REFERENCE.lbar0
    np.testing.assert_allclose(ensemble.log_wealth, np.log(REFERENCE.x0) + growth, atol=1e-10)


def test_deterministic_state_decay():
    params = REFERENCE.model_copy(update={"sigma": 0.0, "sigma_bar": 0.0})
    cfg = SimConfig(n_paths=1, n_steps=10_000)
    ensemble = simulate_reduced(params, ZeroPolicy(), cfg, check=False)
    exact = params.m / params.c * math.exp(-params.c * params.horizon)
    assert ensemble.terminal_state[0] == pytest.approx(exact, abs=5e-5)


def test_mean_state_under_zero_control():
    ensemble = simulate_reduced(REFERENCE, ZeroPolicy(), SMALL.model_copy(update={"n_paths": 4000}))
    terminal = ensemble.terminal_state
    se = terminal.std(ddof=1) / math.sqrt(terminal.shape[0])
    assert abs(terminal.mean() - 0.55 * math.exp(-1.0)) < 3 * se


def test_recorded_trajectories_shapes():
    cfg = SimConfig(n_paths=10, n_steps=20, record_paths=True, record_increments=True)
    ensemble = simulate_reduced(REFERENCE, ConstantPolicy(0.3), cfg)
    assert ensemble.states.shape == (10, 21)
    assert ensemble.controls.shape == (10, 20)
    assert ensemble.increments.shape == (10, 20, 2)
    np.testing.assert_allclose(ensemble.states[:, 0], 0.55)
    assert ensemble.max_control_sq == pytest.approx(0.09)


def test_estimators_check_measure():
    with pytest.raises(SimulationError):
        estimate_J(REFERENCE, ZeroPolicy(), SMALL.model_copy(update={"measure": Measure.P_TILDE}))
    with pytest.raises(SimulationError):
        estimate_hara(REFERENCE, ZeroPolicy(), SMALL)


def test_feedback_beats_bond_only():
    vf = solve(REFERENCE, n_grid=200)
    optimal = estimate_J(REFERENCE, FeedbackPolicy(REFERENCE, vf), SMALL)
    bond = estimate_J(REFERENCE, ZeroPolicy(), SMALL)
    assert optimal.mean >= bond.mean - 2 * optimal.std_error


def test_small_gamma_first_order_expansion():
    params = REFERENCE.model_copy(update={"gamma": 1e-8})
    ensemble = simulate_reduced(params, ConstantPolicy(0.5), SMALL)
    estimate = estimate_J(params, ConstantPolicy(0.5), SMALL)
    first_order = params.gamma * ensemble.integrals.mean()
    assert estimate.mean - 1.0 == pytest.approx(first_order, rel=1e-6)


def test_girsanov_weight_trivial_control():
    cfg = SimConfig(n_paths=20, n_steps=50, measure=Measure.P_TILDE, record_paths=True, record_increments=True)
    ensemble = simulate_original(REFERENCE, ZeroPolicy(), cfg)
    weights = girsanov_weight(REFERENCE, ensemble.controls, ensemble.increments, 1.0 / 50)
    np.testing.assert_array_equal(weights, np.ones(20))


def test_girsanov_weights_are_a_martingale_without_correlation():
    params = REFERENCE.model_copy(update={"rho": 0.0})
    cfg = SimConfig(
        n_paths=4000,
        n_steps=50,
        measure=Measure.P_TILDE,
        record_paths=True,
        record_increments=True,
    )
    ensemble = simulate_original(params, ConstantPolicy(0.5), cfg)
    weights = girsanov_weight(params, ensemble.controls, ensemble.increments, 1.0 / 50)
    assert np.all(weights > 0.0)
    np.testing.assert_allclose(weights, ensemble.rn_weights, rtol=1e-10)
    se = weights.std(ddof=1) / math.sqrt(weights.shape[0])
    assert abs(weights.mean() - 1.0) < 3 * se


def test_cross_term_variant_lowers_weights_with_positive_correlation():
    cfg = SimConfig(n_paths=10, n_steps=20, measure=Measure.P_TILDE, record_paths=True, record_increments=True)
    ensemble = simulate_original(REFERENCE, ConstantPolicy(0.5), cfg)
    literal = girsanov_weight(REFERENCE, ensemble.controls, ensemble.increments, 0.05)
    crossed = girsanov_weight(REFERENCE, ensemble.controls, ensemble.increments, 0.05, cross_term=True)
    # ρ > 0 makes the compensator larger
    assert np.all(crossed < literal)


def test_euler_terminal_mean_stable_under_refinement():
    vf = solve(REFERENCE, n_grid=200)
    policy = FeedbackPolicy(REFERENCE, vf)
    means, errors = [], []
    for n_steps, seed in ((100, 21), (200, 22)):
        ensemble = simulate_reduced(REFERENCE, policy, SimConfig(n_paths=4000, n_steps=n_steps, seed=seed))
        x_end = ensemble.terminal_state
        means.append(x_end.mean())
        errors.append(x_end.std(ddof=1) / math.sqrt(x_end.size))
    assert abs(means[0] - means[1]) < 3.0 * math.hypot(*errors)
