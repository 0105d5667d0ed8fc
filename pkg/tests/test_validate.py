"""Tests for Monte Carlo validation and the analytic two-point oracle."""

import math

import numpy as np
import pytest

from powgame import (
    discrete_worstcase_violation,
    empirical_utilities,
    empirical_violation,
    sample_uncertainty,
    solve_equilibrium,
)
from powgame.validate import binomial_slack, two_point_atoms



def test_two_point_atoms_exact_moments():
    hi, lo = two_point_atoms(0.0, 100.0, 0.5)
    assert (hi, lo) == (10.0, -10.0)
    rng = np.random.default_rng(50)
    for _ in range(50):
        mu = float(rng.uniform(-5.0, 5.0))
        s2 = float(rng.uniform(1.0, 200.0))
        p = float(rng.uniform(0.01, 0.99))
        hi, lo = two_point_atoms(mu, s2, p)
        mean = p * hi + (1 - p) * lo
        var = p * (hi - mean) ** 2 + (1 - p) * (lo - mean) ** 2
        assert mean == pytest.approx(mu, abs=1e-9)
        assert var == pytest.approx(s2, rel=1e-9)
    with pytest.raises(ValueError):
        two_point_atoms(0.0, 100.0, 1.0)


def test_sample_batches_match_target_moments():
    n = 4000
    for dist in ("gaussian", "uniform", "poisson_shifted", "two_point"):
        batch = sample_uncertainty(dist, 1.5, 100.0, n, seed=11, p=0.3)
        assert len(batch.draws) == n
        assert batch.draws.mean() == pytest.approx(1.5, abs=4.0 * 10.0 / math.sqrt(n))
        assert batch.draws.var() == pytest.approx(100.0, rel=0.2)


def test_poisson_shifted_construction():
    # lambda = sigma^2 = 100; integer lattice shifted to mean mu
    batch = sample_uncertainty("poisson_shifted", 2.0, 100.0, 1000, seed=3)
    lattice = batch.draws - 2.0 + 100.0
    assert np.allclose(lattice, np.round(lattice))
    assert batch.draws.var() == pytest.approx(100.0, rel=0.2)


def test_sampling_is_reproducible_and_order_independent():
    a = sample_uncertainty("gaussian", 0.0, 100.0, 1000, seed=9, miner_index=2)
    b = sample_uncertainty("gaussian", 0.0, 100.0, 1000, seed=9, miner_index=2)
    assert np.array_equal(a.draws, b.draws)
    # another miner's stream does not disturb miner 2's
    sample_uncertainty("gaussian", 0.0, 100.0, 1000, seed=9, miner_index=0)
    c = sample_uncertainty("gaussian", 0.0, 100.0, 1000, seed=9, miner_index=2)
    assert np.array_equal(a.draws, c.draws)
    d = sample_uncertainty("gaussian", 0.0, 100.0, 1000, seed=10, miner_index=2)
    assert not np.array_equal(a.draws, d.draws)


def test_sampling_validation_errors():
    with pytest.raises(ValueError):
        sample_uncertainty("cauchy", 0.0, 100.0, 10, seed=0)
    with pytest.raises(ValueError):
        sample_uncertainty("gaussian", 0.0, 0.0, 10, seed=0)
    with pytest.raises(ValueError):
        sample_uncertainty("gaussian", 0.0, 100.0, 0, seed=0)
    with pytest.raises(ValueError):
        sample_uncertainty("two_point", 0.0, 100.0, 10, seed=0, p=1.0)


def test_empirical_violation_counts_and_histogram(reference_config):
    batch = sample_uncertainty("gaussian", 0.0, 100.0, 1000, seed=1)
    report = empirical_violation([0.5] * 5, -1e9, 0, reference_config, batch)
    assert report.n_violations == 0 and report.rate == 0.0 and report.passed
    assert int(report.counts.sum()) == report.n_samples == 1000
    assert len(report.bin_edges) == len(report.counts) + 1
    # mean-level threshold splits the draws roughly in half
    report = empirical_violation([0.5] * 5, -50.0, 0, reference_config, batch)
    assert report.rate == report.n_violations / 1000
    assert 0.3 < report.rate < 0.7


def test_empirical_matches_analytic_two_point_probability(reference_config):
    # pick a threshold between the two atoms' utilities so only one violates
    p = 0.23
    batch = sample_uncertainty("two_point", 0.0, 100.0, 100_000, seed=21, p=p)
    alphas = [0.5] * 5
    hi, lo = two_point_atoms(0.0, 100.0, p)
    u_hi = empirical_utilities(alphas, 0, reference_config, np.array([hi]))[0]
    u_lo = empirical_utilities(alphas, 0, reference_config, np.array([lo]))[0]
    threshold = 0.5 * (min(u_hi, u_lo) + max(u_hi, u_lo))
    analytic = p if u_hi < threshold else (1.0 - p)
    report = empirical_violation(alphas, threshold, 0, reference_config, batch)
    slack = 3.0 * math.sqrt(p * (1 - p) / report.n_samples)
    assert report.rate == pytest.approx(analytic, abs=slack)


def test_clamped_draws_stay_in_confidence_interval(reference_config):
    batch = sample_uncertainty("gaussian", 0.0, 900.0, 2000, seed=2)
    params = reference_config.miners[0]
    clamped = empirical_utilities([0.5] * 5, 0, reference_config, batch.draws, clamp=True)
    x = params.x_hat + batch.draws
    assert np.any(x > params.x_max) or np.any(x < params.x_min)  # clamp must matter
    load = 110.0
    worst_x = np.clip(x, params.x_min, params.x_max)
    own = 0.5 * worst_x
    expected = reference_config.reward.total * own / (own + load) - params.cost * own
    assert np.allclose(clamped, expected)


def test_discrete_worstcase_vacuous_threshold(reference_config):
    assert discrete_worstcase_violation([0.5] * 5, [-1e9] * 5, reference_config) == 0.0


def test_discrete_worstcase_flags_infeasible_solution(reference_config):
    result = solve_equilibrium(reference_config, "dro_cvar")
    u = list(result.u_mins)
    worst = discrete_worstcase_violation(result.alphas, u, reference_config)
    assert worst <= reference_config.epsilon + 1e-12
    inflated = [v + 0.1 * abs(v) for v in u]
    worst_bad = discrete_worstcase_violation(result.alphas, inflated, reference_config)
    assert worst_bad > reference_config.epsilon


def test_cvar_guarantee_holds_for_whole_sampled_family(reference_config):
    # forward direction of the chance-constraint/CVaR equivalence: any
    # moment-matched distribution violates with probability <= eps (+ slack)
    result = solve_equilibrium(reference_config, "dro_cvar")
    n = 10_000
    slack = 3.0 * math.sqrt(reference_config.epsilon / n)
    for dist in ("gaussian", "uniform", "poisson_shifted", "two_point"):
        batch = sample_uncertainty(
            dist, 0.0, 100.0, n, seed=33, miner_index=0, p=reference_config.epsilon
        )
        report = empirical_violation(result.alphas, result.u_mins[0], 0, reference_config, batch)
        assert report.rate <= reference_config.epsilon + slack


def test_binomial_slack_value():
    assert binomial_slack(0.1, 1000) == pytest.approx(3.0 * math.sqrt(0.09 / 1000))
