"""Monte Carlo robustness validation of equilibrium strategies.

Solutions are stress-tested by sampling the resource perturbation from
moment-matched distributions (same mean and variance, different shapes),
recomputing the realized utilities, and counting how often they fall below
the certified threshold.  A two-point family evaluated in closed form acts
as the analytic worst-case probe: its violation probability can be computed
exactly, atom by atom, independent of any solver internals.

Sampling uses the counter-based Philox generator; each (seed, miner,
distribution) triple hashes to its own stream, so batches are reproducible
and independent of evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cvar import LossCoefficients
from .model import GameConfig, others_load

__all__ = [
    "DISTRIBUTIONS",
    "SampleBatch",
    "ViolationReport",
    "sample_uncertainty",
    "empirical_utilities",
    "empirical_violation",
    "discrete_worstcase_violation",
    "two_point_atoms",
]

DISTRIBUTIONS = ("gaussian", "uniform", "poisson_shifted", "two_point")
_DIST_CODE = {name: k for k, name in enumerate(DISTRIBUTIONS)}
HISTOGRAM_BINS = 40
SLACK_SIGMAS = 3.0  # binomial slack width for pass/fail at finite sample size


def _stream(seed: int, miner_index: int, distribution: str) -> np.random.Generator:
    seq = np.random.SeedSequence(
        entropy=int(seed) & 0xFFFFFFFF,
        spawn_key=(int(miner_index), _DIST_CODE[distribution]),
    )
    return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """Seeded draws of the resource perturbation under one distribution."""

    distribution: str
    mu: float
    sigma2: float
    seed: int
    miner_index: int
    draws: np.ndarray
    two_point_p: float | None = None


def two_point_atoms(mu, sigma2, p):
    """Atoms (high, low) of the two-point distribution matching (mu, sigma2).

    High atom mu + s*sqrt((1-p)/p) with probability p, low atom
    mu - s*sqrt(p/(1-p)) with probability 1-p; moments match exactly.
    """
    if not 0 < p < 1:
        raise ValueError(f"two-point probability must be in (0,1), got {p}")
    s = math.sqrt(sigma2)
    return mu + s * math.sqrt((1 - p) / p), mu - s * math.sqrt(p / (1 - p))


def sample_uncertainty(
    distribution: str,
    mu: float,
    sigma2: float,
    n: int,
    seed: int,
    miner_index: int = 0,
    p: float = 0.5,
) -> SampleBatch:
    """Draw n perturbations with the requested mean/variance and shape.

    gaussian:        N(mu, sigma2)
    uniform:         U(mu - sqrt(3) s, mu + sqrt(3) s)
    poisson_shifted: (Poisson(lambda) - lambda) + mu with lambda = sigma2,
                     which matches both moments exactly on an integer lattice
    two_point:       the two-atom family parameterized by p
    """
    if distribution not in DISTRIBUTIONS:
        raise ValueError(f"unknown distribution {distribution!r}")
    if sigma2 <= 0:
        raise ValueError("sampling needs positive variance")
    if n < 1:
        raise ValueError("need at least one draw")
    rng = _stream(seed, miner_index, distribution)
    s = math.sqrt(sigma2)
    tp_p = None
    if distribution == "gaussian":
        draws = rng.normal(mu, s, size=n)
    elif distribution == "uniform":
        half = math.sqrt(3.0) * s
        draws = rng.uniform(mu - half, mu + half, size=n)
    elif distribution == "poisson_shifted":
        lam = sigma2
        draws = rng.poisson(lam, size=n).astype(float) - lam + mu
    else:
        hi, lo = two_point_atoms(mu, sigma2, p)
        draws = np.where(rng.random(n) < p, hi, lo)
        tp_p = p
    return SampleBatch(
        distribution=distribution,
        mu=mu,
        sigma2=sigma2,
        seed=seed,
        miner_index=miner_index,
        draws=draws,
        two_point_p=tp_p,
    )


@dataclass(frozen=True, eq=False)
class ViolationReport:
    """Violation counts and a utility histogram for one miner and batch."""

    n_samples: int
    n_violations: int
    rate: float
    epsilon: float
    passed: bool
    bin_edges: np.ndarray
    counts: np.ndarray


def binomial_slack(epsilon, n) -> float:
    return SLACK_SIGMAS * math.sqrt(epsilon * (1.0 - epsilon) / n)


def empirical_utilities(alphas, j, config: GameConfig, draws, clamp=False) -> np.ndarray:
    """Realized utilities of miner j across draws, rivals at nominal resources.

    Only miner j's resource is random: x_j = x_hat_j + dx, optionally clamped
    to the confidence interval (floored at 1e-9 so a huge negative draw can
    never produce a nonpositive resource).
    """
    params = config.miners[j]
    x_j = params.x_hat + np.asarray(draws, dtype=float)
    if clamp:
        x_j = np.clip(x_j, max(params.x_min, 1e-9), params.x_max)
    else:
        x_j = np.maximum(x_j, 1e-9)  # a pathological negative draw must not flip signs
    a = np.asarray(alphas, dtype=float)
    load = others_load(j, a, config.nominal_resources())
    own = a[j] * x_j
    return config.reward.total * own / (own + load) - params.cost * own


def empirical_violation(
    alphas,
    u_min,
    j,
    config: GameConfig,
    batch: SampleBatch,
    clamp=False,
) -> ViolationReport:
    """Count how often miner j's realized utility falls below u_min."""
    utils = empirical_utilities(alphas, j, config, batch.draws, clamp=clamp)
    n = len(utils)
    violations = int(np.sum(utils < u_min))
    rate = violations / n
    counts, edges = np.histogram(utils, bins=HISTOGRAM_BINS)
    return ViolationReport(
        n_samples=n,
        n_violations=violations,
        rate=rate,
        epsilon=config.epsilon,
        passed=rate <= config.epsilon + binomial_slack(config.epsilon, n),
        bin_edges=edges,
        counts=counts,
    )


def discrete_worstcase_violation(alphas, u_mins, config: GameConfig, p_grid=None) -> float:
    """Exact violation probability maximized over the two-point family.

    For every miner and every p on the grid, place the two moment-matched
    atoms, evaluate the loss at each atom analytically, and add up the atom
    probabilities where the loss is positive (utility below threshold).  A
    certified solution must stay at or below epsilon on the whole family.
    """
    if p_grid is None:
        p_grid = np.linspace(0.005, 0.995, 199)
    a = np.asarray(alphas, dtype=float)
    x = config.nominal_resources()
    worst = 0.0
    for j, params in enumerate(config.miners):
        load = others_load(j, a, x)
        coeffs = LossCoefficients.from_strategy(
            a[j], u_mins[j], load, params.cost, config.reward.total
        )
        for p in p_grid:
            hi, lo = two_point_atoms(params.nominal, params.sigma2, float(p))
            rate = 0.0
            if coeffs(hi) > 0.0:
                rate += p
            if coeffs(lo) > 0.0:
                rate += 1.0 - p
            worst = max(worst, float(rate))
    return worst
