"""Domain types and the deterministic utility mathematics of the mining game.

A set of miners splits a block reward in proportion to the computing power
each one commits.  Miner j commits the fraction ``alpha_j`` of its available
resource ``x_j``, wins the reward ``R = fixed + unit_tx * tx_count`` with
probability equal to its share of the total committed power, and pays
``cost_j * alpha_j * x_j`` for the resources it burns.  Everything else in
the package (closed forms, robust solvers, Monte Carlo validation) is built
on the functions and records defined here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "RewardModel",
    "MinerParams",
    "GameConfig",
    "StrategyProfile",
    "ConvergenceError",
    "SolverError",
    "hash_power",
    "utility",
    "utility_gradient",
    "utility_second_derivative",
    "others_load",
]


class SolverError(RuntimeError):
    """A solver received inputs for which no feasible point exists."""


class ConvergenceError(RuntimeError):
    """An iterative solver hit its iteration cap.

    The last iterate is attached as ``last`` so callers can inspect it.
    """

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


@dataclass(frozen=True)
class RewardModel:
    """Block reward: a fixed part plus a per-transaction commission."""

    fixed_reward: float = 5000.0
    unit_tx_reward: float = 10.0
    tx_count: float = 300.0

    def __post_init__(self):
        if self.fixed_reward < 0 or self.unit_tx_reward < 0 or self.tx_count < 0:
            raise ValueError("reward components must be nonnegative")
        if self.total <= 0:
            raise ValueError("total reward must be positive")

    @property
    def total(self) -> float:
        return self.fixed_reward + self.unit_tx_reward * self.tx_count


@dataclass(frozen=True)
class MinerParams:
    """One miner: resource estimate, uncertainty moments, cost, resource bounds.

    ``x_hat`` is the estimated available resource; the realized resource is
    ``x_hat + dx`` where the perturbation ``dx`` has mean ``mu`` and variance
    ``sigma2`` but otherwise unknown distribution.  ``nominal`` is the mean
    realized resource ``x_hat + mu`` used whenever a point value is needed.
    """

    x_hat: float
    mu: float = 0.0
    sigma2: float = 0.0
    cost: float = 60.0
    x_min: float = 10.0
    x_max: float = 100.0

    def __post_init__(self):
        if self.x_hat <= 0:
            raise ValueError(f"x_hat must be positive, got {self.x_hat}")
        if self.sigma2 < 0:
            raise ValueError(f"sigma2 must be nonnegative, got {self.sigma2}")
        if self.cost <= 0:
            raise ValueError(f"cost must be positive, got {self.cost}")
        if not (0 < self.x_min <= self.x_hat <= self.x_max):
            raise ValueError(
                f"need 0 < x_min <= x_hat <= x_max, got "
                f"({self.x_min}, {self.x_hat}, {self.x_max})"
            )
        if self.nominal <= 0:
            raise ValueError("nominal resource x_hat + mu must be positive")

    @property
    def nominal(self) -> float:
        return self.x_hat + self.mu

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)


@dataclass(frozen=True)
class GameConfig:
    """Full game instance: miners, reward, box floor and solver tolerances."""

    miners: tuple[MinerParams, ...]
    reward: RewardModel = RewardModel()
    tau0: float = 0.5
    epsilon: float = 0.1
    kappa: float = 1e-6
    max_iterations: int = 100

    def __post_init__(self):
        object.__setattr__(self, "miners", tuple(self.miners))
        if len(self.miners) < 2:
            raise ValueError("need at least 2 miners")
        if not 0 < self.tau0 < 1:
            raise ValueError(f"tau0 must be in (0,1), got {self.tau0}")
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must be in (0,1), got {self.epsilon}")
        if self.kappa <= 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")

    @property
    def n_miners(self) -> int:
        return len(self.miners)

    def nominal_resources(self) -> np.ndarray:
        return np.array([m.nominal for m in self.miners])

    def costs(self) -> np.ndarray:
        return np.array([m.cost for m in self.miners])


@dataclass(frozen=True)
class StrategyProfile:
    """The vector of mining investment coefficients, one per miner."""

    alphas: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        for a in self.alphas:
            if not 0 < a <= 1:
                raise ValueError(f"alpha must be in (0,1], got {a}")

    def check_box(self, tau0, atol=1e-12):
        for a in self.alphas:
            if a < tau0 - atol:
                raise ValueError(f"alpha {a} below participation floor {tau0}")
        return self

    def __len__(self):
        return len(self.alphas)

    def __iter__(self):
        return iter(self.alphas)

    def __getitem__(self, i):
        return self.alphas[i]

    def __array__(self, dtype=None, copy=None):
        return np.array(self.alphas, dtype=dtype)


def _as_arrays(profile, resources) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(profile, dtype=float)
    x = np.asarray(resources, dtype=float)
    if a.shape != x.shape or a.ndim != 1:
        raise ValueError(f"profile and resources must match, got {a.shape} vs {x.shape}")
    if np.any(x <= 0):
        raise ValueError("resources must be positive")
    if np.any(a <= 0) or np.any(a > 1):
        raise ValueError("alphas must be in (0,1]")
    return a, x


def _check_index(j, n):
    if not 0 <= j < n:
        raise IndexError(f"miner index {j} out of range for {n} miners")


def hash_power(j: int, profile: Sequence[float], resources: Sequence[float]) -> float:
    """Miner j's share of total committed power, alpha_j x_j / sum_k alpha_k x_k."""
    a, x = _as_arrays(profile, resources)
    _check_index(j, len(a))
    committed = a * x
    return float(committed[j] / committed.sum())


def utility(
    j: int,
    profile: Sequence[float],
    resources: Sequence[float],
    reward: RewardModel,
    cost: float,
) -> float:
    """Expected utility of miner j: reward share minus resource cost.

    ``R * h_j - cost * alpha_j * x_j``.  May be negative; the participation
    floor tau0 deliberately keeps miners in the game even at a loss.
    """
    a, x = _as_arrays(profile, resources)
    _check_index(j, len(a))
    committed = a * x
    return float(reward.total * committed[j] / committed.sum() - cost * committed[j])


def others_load(j: int, profile: Sequence[float], resources: Sequence[float]) -> float:
    """Total power committed by everyone except miner j: sum_{l != j} alpha_l x_l."""
    a, x = _as_arrays(profile, resources)
    _check_index(j, len(a))
    committed = a * x
    return float(committed.sum() - committed[j])


def utility_gradient(
    j: int,
    profile: Sequence[float],
    resources: Sequence[float],
    reward: RewardModel,
    cost: float,
) -> float:
    """d utility / d alpha_j = x_j R sum_{l!=j} alpha_l x_l / S^2 - cost x_j."""
    a, x = _as_arrays(profile, resources)
    _check_index(j, len(a))
    committed = a * x
    total = committed.sum()
    rest = total - committed[j]
    return float(x[j] * reward.total * rest / total**2 - cost * x[j])


def utility_second_derivative(
    j: int,
    profile: Sequence[float],
    resources: Sequence[float],
    reward: RewardModel,
) -> float:
    """d^2 utility / d alpha_j^2; strictly negative whenever rivals commit power."""
    a, x = _as_arrays(profile, resources)
    _check_index(j, len(a))
    committed = a * x
    total = committed.sum()
    rest = total - committed[j]
    return float(-2.0 * x[j] ** 2 * reward.total * rest / total**3)
