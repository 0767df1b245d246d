"""
Cooperative two-parameter-set updates
The r-set chases the bootstrapped target built from the x-set; the x-set
then chases the updated r-set at the visited input. Both moves are single
plain gradient steps.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np

from tdlab.core.config import get_settings
from tdlab.core.exceptions import ContractViolation, DivergenceError
from tdlab.core.agents.state import Transition
from tdlab.core.coop.approximators import DifferentiableApproximator, QFactorModel

ParameterPair = Tuple[np.ndarray, np.ndarray]


class TargetUpdate(str, Enum):
    """How the x-set follows r after each step"""
    OPTIMIZE = "optimize"
    COPY = "copy"


@dataclass(frozen=True)
class SgdStep:
    """Constant-rate gradient steps: primary_rate for r, aux_rate for x"""

    primary_rate: float
    aux_rate: float

    def __post_init__(self):
        if self.primary_rate <= 0.0 or self.aux_rate <= 0.0:
            raise ContractViolation(
                f"rates must be > 0, got ({self.primary_rate}, {self.aux_rate})"
            )


def _check_finite(step_index: int, *params: np.ndarray) -> None:
    norm = float(max(np.linalg.norm(p) for p in params))
    if not np.isfinite(norm) or norm > get_settings().divergence_threshold:
        raise DivergenceError(step_index, norm)


def coop_eval_step(
    r: np.ndarray,
    x: np.ndarray,
    transition: Transition,
    approximator: DifferentiableApproximator,
    optimizer_step: SgdStep,
    discount: float,
) -> ParameterPair:
    """
    r' = r + beta (g + alpha J(j, x) - J(i, r)) grad_r J(i, r)
    x' = x - gamma (J(i, x) - J(i, r')) grad_x J(i, x)
    """
    i, j = transition.from_state, transition.to_state
    beta, gamma = optimizer_step.primary_rate, optimizer_step.aux_rate
    d = transition.reward + discount * approximator.value(j, x) - approximator.value(i, r)
    r_next = r + (beta * d) * approximator.gradient(i, r)
    x_next = x - (gamma * (approximator.value(i, x) - approximator.value(i, r_next))) * approximator.gradient(i, x)
    _check_finite(transition.step_index, r_next, x_next)
    return r_next, x_next


def coop_q_step(
    r: np.ndarray,
    x: np.ndarray,
    transition: Transition,
    qmodel: QFactorModel,
    optimizer_step: SgdStep,
    discount: float,
    terminal: bool = False,
    target_update: TargetUpdate = TargetUpdate.OPTIMIZE,
) -> ParameterPair:
    """
    Q-factor variant. The target g + alpha max_v Q(j, v, x) depends on x only,
    so it is a constant in the r-step. terminal drops the bootstrap term.

    TargetUpdate.COPY replaces the x-step with x' = r', which is standard
    Q-learning with a target set synchronized every step.
    """
    if transition.action is None or not 0 <= transition.action < qmodel.n_actions:
        raise ContractViolation(f"invalid action {transition.action!r} for {qmodel.n_actions} actions")
    visited = (transition.from_state, transition.action)
    beta, gamma = optimizer_step.primary_rate, optimizer_step.aux_rate

    bootstrap = 0.0 if terminal else float(np.max(qmodel.q_values(transition.to_state, x)))
    d = transition.reward + discount * bootstrap - qmodel.value(visited, r)
    r_next = r + (beta * d) * qmodel.gradient(visited, r)
    if target_update is TargetUpdate.COPY:
        x_next = r_next.copy()
    else:
        x_next = x - (gamma * (qmodel.value(visited, x) - qmodel.value(visited, r_next))) * qmodel.gradient(visited, x)
    _check_finite(transition.step_index, r_next, x_next)
    return r_next, x_next


def epsilon_greedy_action(
    qmodel: QFactorModel,
    params: np.ndarray,
    state: int,
    epsilon: float,
    rng: np.random.Generator,
) -> int:
    """
    Greedy with probability 1 - epsilon + epsilon / m, every other action
    with epsilon / m. Ties go to the lowest action index.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ContractViolation(f"epsilon must lie in [0, 1], got {epsilon}")
    greedy = int(np.argmax(qmodel.q_values(state, params)))
    if rng.random() < epsilon:
        return int(rng.integers(qmodel.n_actions))
    return greedy
