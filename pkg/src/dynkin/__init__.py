"""Finite-horizon two-barrier stopping games solved by optimal switching.

Monte Carlo backward induction (LSMC) prices cancellable call/put options,
an exact binomial tree serves as oracle, and closed-form perpetual values
provide the long-horizon benchmarks.
"""

from .closedform import (
    PerpetualParams,
    gamma_exponent,
    perpetual_american_put,
    perpetual_cancellable_call,
    perpetual_cancellable_put,
    perpetual_value,
    solve_kstar,
)
from .lattice import (
    LatticeModel,
    SaddleReport,
    SwitchingControl,
    evaluate_stopping_rules,
    evaluate_switching_control,
    evaluate_switching_policy,
    game_stopping_regions,
    switching_policy_masks,
    tree_american_value,
    tree_game_value,
    tree_saddle_check,
    tree_switching_values,
)
from .lsmc import (
    GameSpec,
    StoppingPair,
    ValueSurface,
    american_backward_induction,
    cancellable_option_spec,
    evaluate_pair,
    extract_stopping_pair,
    game_backward_induction,
    switching_backward_induction,
)
from .market import CALL, PUT, MarketParams, TimeGrid
from .regress import FitResult, RegressionBasis, conditional_expectation, fit_least_squares
from .sim import PathSet, derived_seed, payoff, simulate_paths

__version__ = "0.1.0"

__all__ = [
    "CALL",
    "PUT",
    "FitResult",
    "GameSpec",
    "LatticeModel",
    "MarketParams",
    "PathSet",
    "PerpetualParams",
    "RegressionBasis",
    "SaddleReport",
    "StoppingPair",
    "SwitchingControl",
    "TimeGrid",
    "ValueSurface",
    "american_backward_induction",
    "cancellable_option_spec",
    "conditional_expectation",
    "derived_seed",
    "evaluate_pair",
    "evaluate_stopping_rules",
    "evaluate_switching_control",
    "evaluate_switching_policy",
    "extract_stopping_pair",
    "fit_least_squares",
    "game_backward_induction",
    "game_stopping_regions",
    "gamma_exponent",
    "payoff",
    "perpetual_american_put",
    "perpetual_cancellable_call",
    "perpetual_cancellable_put",
    "perpetual_value",
    "simulate_paths",
    "solve_kstar",
    "switching_backward_induction",
    "switching_policy_masks",
    "tree_american_value",
    "tree_game_value",
    "tree_saddle_check",
    "tree_switching_values",
]
