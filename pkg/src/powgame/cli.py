"""Scenario ingestion, experiment orchestration and CSV emission.

A scenario is a single JSON document describing the game (miners, reward,
uncertainty moments, tolerances), the solver mode(s) to run, and the
validation plan.  Three verbs drive it:

    powgame solve    --config scenario.json --out results/
    powgame sweep    --config scenario.json --axis epsilon --values 0.02,0.1,0.5
    powgame validate --config scenario.json --out results/

Outputs are plain CSV (UTF-8, LF, headers first) with fixed schemas so that
plots can be produced externally.  Exit codes: 0 success, 1 malformed
configuration, 2 solver non-convergence.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .equilibrium import EquilibriumResult, solve_equilibrium
from .model import GameConfig, MinerParams, RewardModel
from .validate import empirical_violation, sample_uncertainty

__all__ = [
    "Scenario",
    "ScenarioError",
    "load_scenario",
    "run_solve",
    "run_sweep",
    "run_validate",
    "main",
]

MODE_ALIASES = {"det": "deterministic", "bti": "gaussian_bti", "cvar": "dro_cvar"}
MODE_SHORT = {v: k for k, v in MODE_ALIASES.items()}
SWEEP_AXES = ("epsilon", "fixed_reward", "unit_cost", "num_miners")
DEFAULT_SWEEP_VALUES = {
    "epsilon": [0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5],
    "fixed_reward": [2000.0, 3000.0, 4000.0, 5000.0, 6000.0, 7000.0, 8000.0],
    "unit_cost": [40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0],
    "num_miners": [3, 4, 5, 6, 7, 8, 9, 10],
}

EQUILIBRIUM_HEADER = ["miner_id", "alpha_star", "u_min_star", "x_hat", "cost"]
TRACE_HEADER = ["sweep", "miner_id", "alpha", "u_min"]
SWEEP_HEADER = ["axis_value", "mode", "sum_u_min", "sum_alpha_x", "sweeps_to_converge", "status"]
HISTOGRAM_HEADER = ["mode", "distribution", "miner_id", "bin_lo", "bin_hi", "count"]
VIOLATIONS_HEADER = ["mode", "distribution", "miner_id", "violation_rate", "epsilon", "pass"]


class ScenarioError(ValueError):
    """Malformed scenario document."""


@dataclass(frozen=True)
class Scenario:
    """A named experiment: game instance plus orchestration knobs."""

    name: str
    config: GameConfig
    modes: tuple[str, ...]
    seed: int
    initial_alpha: float
    distributions: tuple[str, ...]
    samples: int
    clamp: bool


def _require(condition, message):
    if not condition:
        raise ScenarioError(message)


def _resolve_modes(selector) -> tuple[str, ...]:
    if selector == "all":
        return tuple(MODE_ALIASES.values())
    if isinstance(selector, str):
        selector = [selector]
    modes = []
    for item in selector:
        mode = MODE_ALIASES.get(item, item)
        _require(
            mode in MODE_ALIASES.values(),
            f"field 'mode': unknown solver mode {item!r} (use det|bti|cvar|all)",
        )
        modes.append(mode)
    return tuple(modes)


def _per_miner(raw, count, field):
    if isinstance(raw, (int, float)):
        return [float(raw)] * count
    _require(
        isinstance(raw, list) and len(raw) == count,
        f"field '{field}': expected a number or a list of length {count}",
    )
    return [float(v) for v in raw]


def scenario_from_dict(doc: dict) -> Scenario:
    """Build a Scenario from a parsed JSON document (reference defaults built in)."""
    _require(isinstance(doc, dict), "top-level document must be a JSON object")
    name = str(doc.get("name", "scenario"))
    count = int(doc.get("miners", 5))
    _require(count >= 2, "field 'miners': need at least 2 miners")
    seed = int(doc.get("seed", 0))

    resources = doc.get("resources", {"mode": "homogeneous", "x_hat": 55.0})
    _require(isinstance(resources, dict) and "mode" in resources, "field 'resources': need a mode")
    if resources["mode"] == "homogeneous":
        x_hats = [float(resources.get("x_hat", 55.0))] * count
    elif resources["mode"] == "heterogeneous":
        lo = float(resources.get("lo", 30.0))
        hi = float(resources.get("hi", 60.0))
        _require(0 < lo < hi, "field 'resources': need 0 < lo < hi")
        rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence(entropy=seed & 0xFFFFFFFF, spawn_key=(0xFEED,)))
        )
        x_hats = [float(v) for v in rng.uniform(lo, hi, size=count)]
    else:
        raise ScenarioError(
            f"field 'resources.mode': expected homogeneous|heterogeneous, got {resources['mode']!r}"
        )

    reward_doc = doc.get("reward", {})
    _require(isinstance(reward_doc, dict), "field 'reward': expected an object")
    reward = RewardModel(
        fixed_reward=float(reward_doc.get("fixed_reward", 5000.0)),
        unit_tx_reward=float(reward_doc.get("unit_tx_reward", 10.0)),
        tx_count=float(reward_doc.get("tx_count", 300.0)),
    )

    costs = _per_miner(doc.get("unit_cost", 60.0), count, "unit_cost")
    mus = _per_miner(doc.get("mu", 0.0), count, "mu")
    sigma = _per_miner(doc.get("sigma", 10.0), count, "sigma")
    x_min = float(doc.get("x_min", 10.0))
    x_max = float(doc.get("x_max", 100.0))

    try:
        miners = tuple(
            MinerParams(
                x_hat=x_hats[j],
                mu=mus[j],
                sigma2=sigma[j] ** 2,
                cost=costs[j],
                x_min=x_min,
                x_max=x_max,
            )
            for j in range(count)
        )
        config = GameConfig(
            miners=miners,
            reward=reward,
            tau0=float(doc.get("tau0", 0.5)),
            epsilon=float(doc.get("epsilon", 0.1)),
            kappa=float(doc.get("kappa", 1e-6)),
            max_iterations=int(doc.get("max_iterations", 100)),
        )
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc

    validation = doc.get("validation", {})
    _require(isinstance(validation, dict), "field 'validation': expected an object")
    distributions = tuple(
        validation.get("distributions", ["gaussian", "uniform", "poisson_shifted"])
    )
    samples = int(validation.get("samples", 1000))
    _require(samples >= 1, "field 'validation.samples': need at least 1")

    return Scenario(
        name=name,
        config=config,
        modes=_resolve_modes(doc.get("mode", "all")),
        seed=seed,
        initial_alpha=float(doc.get("initial_alpha", 0.35)),
        distributions=distributions,
        samples=samples,
        clamp=bool(validation.get("clamp", False)),
    )


def load_scenario(path, seed=None, mode=None) -> Scenario:
    """Parse a scenario file; JSON syntax errors keep their line anchors."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(
            f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    scenario = scenario_from_dict(doc)
    if seed is not None:
        # the seed feeds heterogeneous draws, so the whole scenario is rebuilt
        doc["seed"] = int(seed)
        scenario = scenario_from_dict(doc)
    if mode is not None:
        scenario = replace(scenario, modes=_resolve_modes(mode))
    return scenario


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _result_u_values(result: EquilibriumResult):
    return result.trace[-1][1] if result.u_mins is None else result.u_mins


def _solve_mode(scenario: Scenario, mode: str) -> EquilibriumResult:
    return solve_equilibrium(scenario.config, mode, initial_alpha=scenario.initial_alpha)


def run_solve(scenario: Scenario, out_dir) -> int:
    """Solve each requested mode; write equilibrium.csv and trace.csv per mode."""
    out = Path(out_dir)
    exit_code = 0
    for mode in scenario.modes:
        result = _solve_mode(scenario, mode)
        u_values = _result_u_values(result)
        config = scenario.config
        _write_csv(
            out / MODE_SHORT[mode] / "equilibrium.csv",
            EQUILIBRIUM_HEADER,
            [
                (j, result.alphas[j], u_values[j], config.miners[j].x_hat, config.miners[j].cost)
                for j in range(config.n_miners)
            ],
        )
        _write_csv(
            out / MODE_SHORT[mode] / "trace.csv",
            TRACE_HEADER,
            [
                (sweep, j, alphas[j], us[j])
                for sweep, (alphas, us) in enumerate(result.trace, start=1)
                for j in range(config.n_miners)
            ],
        )
        if not result.converged:
            exit_code = 2
    return exit_code


def _config_for_axis(config: GameConfig, axis: str, value) -> GameConfig:
    if axis == "epsilon":
        return replace(config, epsilon=float(value))
    if axis == "fixed_reward":
        return replace(config, reward=replace(config.reward, fixed_reward=float(value)))
    if axis == "unit_cost":
        miners = tuple(replace(m, cost=float(value)) for m in config.miners)
        return replace(config, miners=miners)
    if axis == "num_miners":
        count = int(value)
        if count < 2:
            raise ScenarioError(f"num_miners must be >= 2, got {count}")
        # cycle the configured miners up or down to the requested count
        miners = tuple(config.miners[j % len(config.miners)] for j in range(count))
        return replace(config, miners=miners)
    raise ScenarioError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")


def run_sweep(scenario: Scenario, axis: str, values, out_dir) -> int:
    """One solve per (axis value, mode); failures become status rows."""
    if axis not in SWEEP_AXES:
        raise ScenarioError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")
    if not values:
        raise ScenarioError("sweep needs at least one axis value")
    rows = []
    for value in values:
        config = _config_for_axis(scenario.config, axis, value)
        x = config.nominal_resources()
        for mode in scenario.modes:
            try:
                result = solve_equilibrium(config, mode, initial_alpha=scenario.initial_alpha)
            except Exception as exc:  # recorded, not fatal: the sweep continues
                rows.append((value, MODE_SHORT[mode], math.nan, math.nan, -1, f"error:{type(exc).__name__}"))
                continue
            committed = float(np.dot(np.asarray(result.alphas, dtype=float), x))
            rows.append(
                (
                    value,
                    MODE_SHORT[mode],
                    result.total_u_min(),
                    committed,
                    result.iterations,
                    "ok" if result.converged else "not_converged",
                )
            )
    _write_csv(Path(out_dir) / "sweep.csv", SWEEP_HEADER, rows)
    return 0


def run_validate(scenario: Scenario, out_dir) -> int:
    """Solve, then Monte Carlo-check every (mode, miner, distribution) triple."""
    out = Path(out_dir)
    config = scenario.config
    hist_rows = []
    report_rows = []
    exit_code = 0
    for mode in scenario.modes:
        result = _solve_mode(scenario, mode)
        if not result.converged:
            exit_code = 2
        u_values = _result_u_values(result)
        short = MODE_SHORT[mode]
        for j in range(config.n_miners):
            params = config.miners[j]
            for dist in scenario.distributions:
                batch = sample_uncertainty(
                    dist, params.mu, params.sigma2, scenario.samples, scenario.seed, miner_index=j
                )
                report = empirical_violation(
                    result.alphas, u_values[j], j, config, batch, clamp=scenario.clamp
                )
                report_rows.append((short, dist, j, report.rate, config.epsilon, report.passed))
                hist_rows.extend(
                    (short, dist, j, report.bin_edges[k], report.bin_edges[k + 1], int(report.counts[k]))
                    for k in range(len(report.counts))
                )
    _write_csv(out / "histogram.csv", HISTOGRAM_HEADER, hist_rows)
    _write_csv(out / "violations.csv", VIOLATIONS_HEADER, report_rows)
    return exit_code


def _parse_values(raw: str, axis: str):
    if raw is None:
        return DEFAULT_SWEEP_VALUES[axis]
    try:
        values = [float(v) for v in raw.split(",") if v.strip()]
    except ValueError as exc:
        raise ScenarioError(f"--values: {exc}") from exc
    if axis == "num_miners":
        values = [int(v) for v in values]
    return values


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="powgame",
        description="Mining-game equilibria under resource uncertainty, with Monte Carlo validation.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, text in (
        ("solve", "compute equilibria and convergence traces"),
        ("sweep", "re-solve along a parameter axis"),
        ("validate", "Monte Carlo robustness check of the equilibrium"),
    ):
        p = sub.add_parser(verb, help=text)
        p.add_argument("--config", required=True, help="scenario JSON file")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument(
            "--mode",
            choices=sorted(MODE_ALIASES) + ["all"],
            default=None,
            help="override the scenario solver mode",
        )
        if verb == "sweep":
            p.add_argument("--axis", choices=SWEEP_AXES, required=True)
            p.add_argument(
                "--values",
                default=None,
                help="comma-separated axis values (defaults are built in)",
            )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        scenario = load_scenario(args.config, seed=args.seed, mode=args.mode)
        if args.verb == "solve":
            return run_solve(scenario, args.out)
        if args.verb == "sweep":
            return run_sweep(scenario, args.axis, _parse_values(args.values, args.axis), args.out)
        return run_validate(scenario, args.out)
    except ScenarioError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
