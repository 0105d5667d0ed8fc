"""Nash equilibria for proof-of-work mining under resource uncertainty.

Three interchangeable best-response back-ends drive one Gauss-Seidel
iteration: a deterministic closed form, a Gaussian solver based on a
Bernstein-type tail bound, and a distribution-free solver based on
worst-case CVaR over a mean/variance ambiguity set.  Monte Carlo and
analytic two-point oracles validate the robustness of the results.
"""

from .bti import (
    BtiBestResponse,
    BtiCoefficients,
    bti_constraint_value,
    robust_best_response_gaussian,
    subproblem_strategy_gaussian,
    subproblem_threshold_gaussian,
)
from .cvar import (
    CvarBestResponse,
    CvarCertificate,
    LossCoefficients,
    MomentMatrix,
    loss_eval,
    robust_best_response,
    subproblem_strategy,
    subproblem_threshold,
    worstcase_cvar,
)
from .deterministic import (
    DeterministicEquilibrium,
    best_response,
    best_response_fixed_point,
    closed_form_equilibrium,
)
from .equilibrium import MODES, EquilibriumResult, solve_equilibrium
from .model import (
    ConvergenceError,
    GameConfig,
    MinerParams,
    RewardModel,
    SolverError,
    StrategyProfile,
    hash_power,
    others_load,
    utility,
    utility_gradient,
    utility_second_derivative,
)
from .validate import (
    DISTRIBUTIONS,
    SampleBatch,
    ViolationReport,
    discrete_worstcase_violation,
    empirical_utilities,
    empirical_violation,
    sample_uncertainty,
)

__version__ = "0.1.0"

__all__ = [
    "BtiBestResponse",
    "BtiCoefficients",
    "ConvergenceError",
    "CvarBestResponse",
    "CvarCertificate",
    "DeterministicEquilibrium",
    "DISTRIBUTIONS",
    "EquilibriumResult",
    "GameConfig",
    "LossCoefficients",
    "MinerParams",
    "MODES",
    "MomentMatrix",
    "RewardModel",
    "SampleBatch",
    "SolverError",
    "StrategyProfile",
    "ViolationReport",
    "best_response",
    "best_response_fixed_point",
    "bti_constraint_value",
    "closed_form_equilibrium",
    "discrete_worstcase_violation",
    "empirical_utilities",
    "empirical_violation",
    "hash_power",
    "loss_eval",
    "others_load",
    "robust_best_response",
    "robust_best_response_gaussian",
    "sample_uncertainty",
    "solve_equilibrium",
    "subproblem_strategy",
    "subproblem_strategy_gaussian",
    "subproblem_threshold",
    "subproblem_threshold_gaussian",
    "utility",
    "utility_gradient",
    "utility_second_derivative",
    "worstcase_cvar",
]
