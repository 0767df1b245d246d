# tdlab chain core: finite models and exact oracles
from .model import FeatureMap, MarkovDecisionProcess, MarkovRewardProcess, WeightedNorm
from .operators import (
    ValueIterationResult,
    bellman_apply,
    bellman_residual,
    exact_value,
    lambda_bellman_apply,
    msbe,
    msbe_gradient,
    mspbe,
    mspbe_gradient,
    mspbe_projected,
    optimal_actions,
    project,
    projected_value_iteration,
    projection_matrix,
    td_fixed_point,
    td_system,
    value_iteration,
)
from .generators import make_rng, random_chain, stationary_distribution

__all__ = [
    "FeatureMap", "MarkovDecisionProcess", "MarkovRewardProcess", "WeightedNorm",
    "ValueIterationResult",
    "bellman_apply", "bellman_residual", "exact_value", "lambda_bellman_apply",
    "msbe", "msbe_gradient", "mspbe", "mspbe_gradient", "mspbe_projected",
    "optimal_actions", "project", "projected_value_iteration", "projection_matrix",
    "td_fixed_point", "td_system", "value_iteration",
    "make_rng", "random_chain", "stationary_distribution",
]
