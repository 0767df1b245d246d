"""
Exact operators over finite chains
Bellman maps, D-weighted projection, error functionals and fixed-point solvers.

These are the ground-truth oracles every online evaluator is measured
against. All functions are pure: inputs are never modified and no state is
shared between calls.
"""

from dataclasses import dataclass
from typing import List, Optional, Set, Tuple

import numpy as np
from scipy import linalg

from tdlab.core.config import get_settings
from tdlab.core.exceptions import (
    ContractViolation,
    DegenerateFeaturesError,
    NoFixedPointError,
    UnboundedValueError,
)
from tdlab.core.chain.model import (
    FeatureMap,
    MarkovDecisionProcess,
    MarkovRewardProcess,
    WeightedNorm,
)


def _as_vector(values, length: int, name: str) -> np.ndarray:
    vector = np.asarray(values, dtype=np.float64)
    if vector.ndim == 0:
        vector = vector.reshape(1)
    if vector.shape != (length,):
        raise ContractViolation(f"{name} must have length {length}, got shape {vector.shape}")
    return vector


def _check_features(mrp: MarkovRewardProcess, features: FeatureMap) -> None:
    if features.n_states != mrp.n_states:
        raise ContractViolation(
            f"features cover {features.n_states} states, chain has {mrp.n_states}"
        )


def _max_condition(max_condition: Optional[float]) -> float:
    return get_settings().max_condition_number if max_condition is None else max_condition


def _gram_factor(features: FeatureMap, norm: WeightedNorm, max_condition: Optional[float]):
    bound = _max_condition(max_condition)
    gram = features.gram(norm, max_condition=bound)
    try:
        return linalg.cho_factor(gram)
    except linalg.LinAlgError:
        raise DegenerateFeaturesError(float(np.linalg.cond(gram)), bound)


# =============  Bellman operators =============

def bellman_apply(mrp: MarkovRewardProcess, values) -> np.ndarray:
    """(TJ)(i) = sum_j P(i, j) (g(i, j) + alpha J(j))"""
    J = _as_vector(values, mrp.n_states, "J")
    return (mrp.transition * (mrp.reward + mrp.discount * J[None, :])).sum(axis=1)


def lambda_bellman_apply(mrp: MarkovRewardProcess, values, trace_decay: float) -> np.ndarray:
    """
    T^lambda J = (I - lambda alpha P)^-1 (g_bar + alpha (1 - lambda) P J).

    The closed-form resolvent of (1 - lambda) sum_l lambda^l T^(l+1) J.
    At lambda = 0 this is exactly bellman_apply.
    """
    if not 0.0 <= trace_decay < 1.0:
        raise ContractViolation(f"lambda must lie in [0, 1), got {trace_decay!r}")
    J = _as_vector(values, mrp.n_states, "J")
    if trace_decay == 0.0:
        return bellman_apply(mrp, J)

    n = mrp.n_states
    P = mrp.transition
    resolvent = np.eye(n) - trace_decay * mrp.discount * P
    rhs = mrp.expected_reward + mrp.discount * (1.0 - trace_decay) * (P @ J)
    return linalg.solve(resolvent, rhs)


# =============  Projection =============

def projection_matrix(
    features: FeatureMap,
    norm: WeightedNorm,
    max_condition: Optional[float] = None,
) -> np.ndarray:
    """Pi = Phi (Phi^T D Phi)^-1 Phi^T D, solved through a Cholesky factor of the Gram matrix"""
    factor = _gram_factor(features, norm, max_condition)
    phi = features.matrix
    weighted = (phi * norm.weighting[:, None]).T
    return phi @ linalg.cho_solve(factor, weighted)


def project(
    features: FeatureMap,
    norm: WeightedNorm,
    values,
    max_condition: Optional[float] = None,
) -> np.ndarray:
    """Coefficients r minimising ||values - Phi r||_D (the D-weighted least squares)"""
    J = _as_vector(values, features.n_states, "J")
    factor = _gram_factor(features, norm, max_condition)
    return linalg.cho_solve(factor, features.matrix.T @ (norm.weighting * J))


# =============  Error functionals =============

def bellman_residual(mrp: MarkovRewardProcess, features: FeatureMap, theta) -> np.ndarray:
    """delta_bar = T(Phi theta) - Phi theta"""
    _check_features(mrp, features)
    theta = _as_vector(theta, features.n_features, "theta")
    values = features.matrix @ theta
    return bellman_apply(mrp, values) - values


def msbe(mrp: MarkovRewardProcess, features: FeatureMap, theta) -> float:
    """||T Phi theta - Phi theta||_D^2"""
    residual = bellman_residual(mrp, features, theta)
    return float(np.dot(mrp.weighting, residual * residual))


def msbe_gradient(mrp: MarkovRewardProcess, features: FeatureMap, theta) -> np.ndarray:
    """grad MSBE = -2 (Phi - alpha P Phi)^T D (T Phi theta - Phi theta)"""
    residual = bellman_residual(mrp, features, theta)
    phi = features.matrix
    difference = phi - mrp.discount * (mrp.transition @ phi)
    return -2.0 * difference.T @ (mrp.weighting * residual)


def td_system(mrp: MarkovRewardProcess, features: FeatureMap) -> Tuple[np.ndarray, np.ndarray]:
    """
    A = Phi^T D (Phi - alpha P Phi), b = Phi^T D g_bar.

    Phi^T D delta_bar = b - A theta, so the TD fixed point solves A r = b.
    """
    _check_features(mrp, features)
    phi = features.matrix
    weighted = (phi * mrp.weighting[:, None]).T
    A = weighted @ (phi - mrp.discount * (mrp.transition @ phi))
    b = weighted @ mrp.expected_reward
    return A, b


def mspbe(
    mrp: MarkovRewardProcess,
    features: FeatureMap,
    theta,
    max_condition: Optional[float] = None,
) -> float:
    """(Phi^T D delta_bar)^T (Phi^T D Phi)^-1 (Phi^T D delta_bar)"""
    residual = bellman_residual(mrp, features, theta)
    factor = _gram_factor(features, mrp.norm, max_condition)
    correlation = features.matrix.T @ (mrp.weighting * residual)
    return max(float(correlation @ linalg.cho_solve(factor, correlation)), 0.0)


def mspbe_projected(
    mrp: MarkovRewardProcess,
    features: FeatureMap,
    theta,
    max_condition: Optional[float] = None,
) -> float:
    """||Pi T Phi theta - Phi theta||_D^2, the projection form of the same quantity"""
    theta = _as_vector(theta, features.n_features, "theta")
    _check_features(mrp, features)
    values = features.matrix @ theta
    pi = projection_matrix(features, mrp.norm, max_condition)
    gap = pi @ bellman_apply(mrp, values) - values
    return float(np.dot(mrp.weighting, gap * gap))


def mspbe_gradient(
    mrp: MarkovRewardProcess,
    features: FeatureMap,
    theta,
    max_condition: Optional[float] = None,
) -> np.ndarray:
    """grad MSPBE = -2 A^T (Phi^T D Phi)^-1 (b - A theta)"""
    theta = _as_vector(theta, features.n_features, "theta")
    A, b = td_system(mrp, features)
    factor = _gram_factor(features, mrp.norm, max_condition)
    return -2.0 * A.T @ linalg.cho_solve(factor, b - A @ theta)


# =============  Fixed points and exact values =============

def td_fixed_point(
    mrp: MarkovRewardProcess,
    features: FeatureMap,
    max_condition: Optional[float] = None,
) -> np.ndarray:
    """r* solving A r* = b, i.e. Pi T (Phi r*) = Phi r* (lambda = 0)"""
    A, b = td_system(mrp, features)
    condition = float(np.linalg.cond(A))
    if not np.isfinite(condition) or condition > _max_condition(max_condition):
        raise NoFixedPointError(A, condition)
    return linalg.lu_solve(linalg.lu_factor(A), b)


def projected_value_iteration(
    mrp: MarkovRewardProcess,
    features: FeatureMap,
    initial,
    iterations: int,
    max_condition: Optional[float] = None,
) -> List[np.ndarray]:
    """
    Exact recursion Phi r_(t+1) = Pi T (Phi r_t).

    Each r_(t+1) is the D-weighted least-squares fit of T(Phi r_t).
    Returns [r_0, r_1, ..., r_iterations].
    """
    if iterations < 0:
        raise ContractViolation(f"iterations must be >= 0, got {iterations}")
    _check_features(mrp, features)
    r = np.array(_as_vector(initial, features.n_features, "r0"), copy=True)
    factor = _gram_factor(features, mrp.norm, max_condition)
    phi = features.matrix
    weighted = (phi * mrp.weighting[:, None]).T

    sequence = [r]
    for _ in range(iterations):
        target = bellman_apply(mrp, phi @ r)
        r = linalg.cho_solve(factor, weighted @ target)
        sequence.append(r)
    return sequence


def exact_value(mrp: MarkovRewardProcess) -> np.ndarray:
    """J* = (I - alpha P)^-1 g_bar"""
    if mrp.discount >= 1.0:
        raise UnboundedValueError()
    system = np.eye(mrp.n_states) - mrp.discount * mrp.transition
    return linalg.solve(system, mrp.expected_reward)


# =============  Control oracle =============

@dataclass(frozen=True, eq=False)
class ValueIterationResult:
    values: np.ndarray
    q_values: np.ndarray
    policy: np.ndarray
    iterations: int


def _backup(mdp: MarkovDecisionProcess, values: np.ndarray) -> np.ndarray:
    q = (mdp.transition * (mdp.reward + mdp.discount * values[None, None, :])).sum(axis=2)
    q[mdp.terminal, :] = 0.0
    return q


def value_iteration(
    mdp: MarkovDecisionProcess,
    tolerance: float = 1e-12,
    max_iterations: int = 100_000,
) -> ValueIterationResult:
    """Bellman-optimality fixed point by repeated max-backups (ties break to the lowest action)"""
    values = np.zeros(mdp.n_states)
    for iteration in range(1, max_iterations + 1):
        q = _backup(mdp, values)
        updated = q.max(axis=1)
        if np.max(np.abs(updated - values)) < tolerance:
            values = updated
            q = _backup(mdp, values)
            return ValueIterationResult(values, q, np.argmax(q, axis=1), iteration)
        values = updated
    raise ContractViolation(
        f"value iteration did not reach tolerance {tolerance} in {max_iterations} iterations"
    )


def optimal_actions(q_values: np.ndarray, tolerance: float = 1e-9) -> List[Set[int]]:
    """Per-state set of actions within tolerance of the best Q-value"""
    best = q_values.max(axis=1, keepdims=True)
    return [set(np.flatnonzero(row >= b - tolerance).tolist()) for row, b in zip(q_values, best)]
