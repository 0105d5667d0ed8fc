"""Gauss-Seidel best-response iteration to the game equilibrium.

Miners update in ascending index order, each replacing its strategy (and,
in the robust modes, its utility threshold) with the best response to the
latest profile of the others.  The sweep repeats until one full pass changes
the summed strategies and thresholds by at most kappa.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import bti, cvar, deterministic
from .model import GameConfig, StrategyProfile, utility

__all__ = ["MODES", "EquilibriumResult", "solve_equilibrium"]

MODES = ("deterministic", "gaussian_bti", "dro_cvar")


@dataclass(frozen=True)
class EquilibriumResult:
    """Converged profile with per-sweep history.

    ``u_mins`` holds each miner's certified utility threshold in the robust
    modes and is None in deterministic mode, where ``trace`` records the
    plain utilities instead.  ``trace`` has one (alphas, u values) entry per
    sweep.
    """

    alphas: StrategyProfile
    u_mins: tuple[float, ...] | None
    iterations: int
    converged: bool
    trace: tuple[tuple[tuple[float, ...], tuple[float, ...]], ...]
    mode: str

    def total_u_min(self) -> float:
        values = self.trace[-1][1] if self.u_mins is None else self.u_mins
        return float(sum(values))


def _deterministic_utilities(alphas, config):
    x = config.nominal_resources()
    return np.array(
        [
            utility(j, alphas, x, config.reward, config.miners[j].cost)
            for j in range(config.n_miners)
        ]
    )


def solve_equilibrium(config: GameConfig, mode: str, initial_alpha=0.35) -> EquilibriumResult:
    """Iterate best responses until the summed per-sweep change is <= kappa.

    The initial profile is ``max(tau0, initial_alpha)`` for every miner (an
    initial value below the participation floor is projected onto it) and
    the initial thresholds are the deterministic utilities at that profile.
    Non-convergence within ``config.max_iterations`` sweeps is reported via
    ``converged=False``, never as an exception.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    n = config.n_miners
    alphas = np.full(n, min(1.0, max(config.tau0, initial_alpha)))
    u_values = _deterministic_utilities(alphas, config)
    trace = []
    converged = False
    sweeps = 0
    warm = [None] * n  # later sweeps resume each miner's AO from its own state
    for sweeps in range(1, config.max_iterations + 1):
        prev_alphas = alphas.copy()
        prev_u = u_values.copy()
        for j in range(n):
            if mode == "deterministic":
                alphas[j] = deterministic.best_response(j, alphas, config)
            elif mode == "gaussian_bti":
                response = bti.robust_best_response_gaussian(
                    j, alphas, config, warm_start=warm[j]
                )
                alphas[j] = response.alpha
                u_values[j] = response.u_min
                warm[j] = (response.alpha, response.u_min)
            else:
                response = cvar.robust_best_response(j, alphas, config, warm_start=warm[j])
                alphas[j] = response.alpha
                u_values[j] = response.u_min
                warm[j] = (response.alpha, response.u_min)
        if mode == "deterministic":
            u_values = _deterministic_utilities(alphas, config)
        trace.append((tuple(float(a) for a in alphas), tuple(float(u) for u in u_values)))
        change = float(
            np.abs(alphas - prev_alphas).sum() + np.abs(u_values - prev_u).sum()
        )
        if change <= config.kappa:
            converged = True
            break
    return EquilibriumResult(
        alphas=StrategyProfile(tuple(alphas)),
        u_mins=None if mode == "deterministic" else tuple(float(u) for u in u_values),
        iterations=sweeps,
        converged=converged,
        trace=tuple(trace),
        mode=mode,
    )
