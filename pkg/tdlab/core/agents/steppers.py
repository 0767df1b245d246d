"""
Online linear evaluators
TD(0), TD(lambda), residual gradient, GTD2 and the alternating
coordinate-descent update behind one stepper contract:

    stepper = Stepper(algorithm, features, discount, schedule, ...)
    state = stepper.new(initial, initial_aux)
    state = stepper.step(state, transition)

States are values: step() returns a successor and never mutates its input.
Every update uses the discounted TD error g + alpha phi(j)^T(.) - phi(i)^T(.).
"""

from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np
import structlog

from tdlab.core.config import get_settings
from tdlab.core.exceptions import ContractViolation, DivergenceError
from tdlab.core.chain.model import FeatureMap
from tdlab.core.agents.schedules import StepSizeSchedule
from tdlab.core.agents.state import Algorithm, EvaluatorState, Transition

logger = structlog.get_logger(__name__)

WeightedBatch = Sequence[Tuple[Transition, float]]


@dataclass(frozen=True, eq=False)
class Stepper:
    """
    Hyperparameters shared by every step of one run.

    schedule drives the primary parameters (theta or r); aux_schedule drives
    the auxiliary ones (w for GTD2, x for coordinate descent) and defaults to
    schedule when omitted.
    """

    algorithm: Algorithm
    features: FeatureMap
    discount: float
    schedule: StepSizeSchedule
    aux_schedule: Optional[StepSizeSchedule] = None
    trace_decay: float = 0.0
    reset_trace_on_restart: bool = True
    inner_tolerance: float = 1e-8
    inner_cap: Optional[int] = None
    divergence_threshold: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.discount <= 1.0:
            raise ContractViolation(f"discount must lie in (0, 1], got {self.discount!r}")
        if not 0.0 <= self.trace_decay < 1.0:
            raise ContractViolation(f"lambda must lie in [0, 1), got {self.trace_decay!r}")
        if self.inner_tolerance <= 0.0:
            raise ContractViolation(f"inner tolerance must be > 0, got {self.inner_tolerance!r}")
        settings = get_settings()
        if self.inner_cap is None:
            object.__setattr__(self, "inner_cap", settings.inner_cap)
        if self.divergence_threshold is None:
            object.__setattr__(self, "divergence_threshold", settings.divergence_threshold)
        if self.discount == 1.0:
            logger.warning("stepper.undiscounted", algorithm=self.algorithm.value)

    @property
    def aux_rates(self) -> StepSizeSchedule:
        return self.aux_schedule or self.schedule

    def new(self, initial, initial_aux=None) -> EvaluatorState:
        k = self.features.n_features
        primary = _parameter_vector(initial, k, "initial")
        if self.algorithm is Algorithm.TD_LAMBDA:
            aux = np.zeros(k)
        elif initial_aux is None:
            aux = primary.copy() if self.algorithm.estimates_with_aux else np.zeros(k)
        else:
            aux = _parameter_vector(initial_aux, k, "initial_aux")
        return EvaluatorState(self.algorithm, primary, aux)

    def step(self, state: EvaluatorState, transition: Union[Transition, WeightedBatch]) -> EvaluatorState:
        """Advance one step; coordinate descent also accepts a weighted batch"""
        if state.algorithm is not self.algorithm:
            raise ContractViolation(
                f"state belongs to {state.algorithm.value}, stepper runs {self.algorithm.value}"
            )
        if not isinstance(transition, Transition):
            if self.algorithm is not Algorithm.COORDINATE_DESCENT:
                raise ContractViolation(f"{self.algorithm.value} steps on single transitions only")
            return self.guard(coordinate_descent_batch(self, state, transition))
        n = self.features.n_states
        if not (0 <= transition.from_state < n and 0 <= transition.to_state < n):
            raise ContractViolation(
                f"transition ({transition.from_state}, {transition.to_state}) outside [0, {n})"
            )
        successor = STEP_FUNCTIONS[self.algorithm](self, state, transition)
        return self.guard(successor)

    def guard(self, state: EvaluatorState) -> EvaluatorState:
        norm = float(max(np.linalg.norm(state.primary), np.linalg.norm(state.aux)))
        if not np.isfinite(norm) or norm > self.divergence_threshold:
            logger.warning(
                "stepper.diverged",
                algorithm=self.algorithm.value,
                step=state.step,
                norm=norm,
            )
            raise DivergenceError(state.step, norm)
        return state


def _parameter_vector(values, length: int, name: str) -> np.ndarray:
    vector = np.array(values, dtype=np.float64, copy=True).reshape(-1)
    if vector.size == 1 and length > 1:
        vector = np.full(length, float(vector[0]))
    if vector.shape != (length,):
        raise ContractViolation(f"{name} must have length {length}, got {vector.size}")
    if not np.all(np.isfinite(vector)):
        raise ContractViolation(f"{name} has non-finite entries")
    return vector


def _successor(state: EvaluatorState, primary, aux, td_error: float, cap_hits: int = 0):
    return EvaluatorState(
        state.algorithm,
        primary,
        aux,
        state.step + 1,
        float(td_error),
        state.inner_cap_hits + cap_hits,
    )


# =============  Step functions =============

def td0_step(stepper: Stepper, state: EvaluatorState, t: Transition) -> EvaluatorState:
    """theta <- theta + gamma_t d phi(i)"""
    phi_i = stepper.features.row(t.from_state)
    phi_j = stepper.features.row(t.to_state)
    theta = state.primary
    d = t.reward + stepper.discount * (phi_j @ theta) - phi_i @ theta
    rate = stepper.schedule.rate(state.step)
    return _successor(state, theta + (rate * d) * phi_i, state.aux, d)


def td_lambda_step(stepper: Stepper, state: EvaluatorState, t: Transition) -> EvaluatorState:
    """z <- (alpha lambda) z + phi(i); theta <- theta + gamma_t d z"""
    phi_i = stepper.features.row(t.from_state)
    phi_j = stepper.features.row(t.to_state)
    theta = state.primary
    trace = state.aux
    if t.restart and stepper.reset_trace_on_restart:
        trace = np.zeros_like(trace)
    trace = (stepper.discount * stepper.trace_decay) * trace + phi_i
    d = t.reward + stepper.discount * (phi_j @ theta) - phi_i @ theta
    rate = stepper.schedule.rate(state.step)
    return _successor(state, theta + (rate * d) * trace, trace, d)


def residual_gradient_step(stepper: Stepper, state: EvaluatorState, t: Transition) -> EvaluatorState:
    """theta <- theta + gamma_t d (phi(i) - alpha phi(j)), descent on the sampled d^2 / 2"""
    phi_i = stepper.features.row(t.from_state)
    phi_j = stepper.features.row(t.to_state)
    theta = state.primary
    d = t.reward + stepper.discount * (phi_j @ theta) - phi_i @ theta
    rate = stepper.schedule.rate(state.step)
    direction = phi_i - stepper.discount * phi_j
    return _successor(state, theta + (rate * d) * direction, state.aux, d)


def gtd2_step(stepper: Stepper, state: EvaluatorState, t: Transition) -> EvaluatorState:
    """
    w <- w + beta_t (d - phi(i)^T w) phi(i)
    theta <- theta + gamma_t (phi(i) - alpha phi(j)) phi(i)^T w

    w moves first with d taken at the pre-update theta; the theta step uses
    the updated w.
    """
    phi_i = stepper.features.row(t.from_state)
    phi_j = stepper.features.row(t.to_state)
    theta, w = state.primary, state.aux
    d = t.reward + stepper.discount * (phi_j @ theta) - phi_i @ theta
    beta = stepper.aux_rates.rate(state.step)
    gamma = stepper.schedule.rate(state.step)
    w_next = w + (beta * (d - phi_i @ w)) * phi_i
    direction = phi_i - stepper.discount * phi_j
    theta_next = theta + (gamma * (phi_i @ w_next)) * direction
    return _successor(state, theta_next, w_next, d)


def alternating_cd_step(stepper: Stepper, state: EvaluatorState, t: Transition) -> EvaluatorState:
    """
    r_(k+1) = r_k + beta (g + alpha phi(j)^T x_k - phi(i)^T r_k) phi(i)
    x_(k+1) = x_k + gamma (phi(i)^T r_(k+1) - phi(i)^T x_k) phi(i)

    r moves first; x then chases the already-updated r.
    """
    phi_i = stepper.features.row(t.from_state)
    phi_j = stepper.features.row(t.to_state)
    r, x = state.primary, state.aux
    beta = stepper.schedule.rate(state.step)
    gamma = stepper.aux_rates.rate(state.step)
    d = t.reward + stepper.discount * (phi_j @ x) - phi_i @ r
    r_next = r + (beta * d) * phi_i
    x_next = x - (gamma * (phi_i @ x - phi_i @ r_next)) * phi_i
    return _successor(state, r_next, x_next, d)


def coordinate_descent_step(stepper: Stepper, state: EvaluatorState, t: Transition) -> EvaluatorState:
    """One coordinate-descent outer iteration on a single sampled transition"""
    return coordinate_descent_batch(stepper, state, [(t, 1.0)])


def coordinate_descent_batch(
    stepper: Stepper,
    state: EvaluatorState,
    batch: WeightedBatch,
) -> EvaluatorState:
    """
    One coordinate-descent outer iteration over a weighted batch of transitions.

    The r-loop runs gradient steps on sum_b w_b (g_b + alpha phi(j_b)^T x - phi(i_b)^T r)^2 / 2
    with x frozen, until the max-norm change drops below the inner tolerance;
    the x-loop then fits x to the new r the same way. A batch of one is the
    literal per-transition algorithm; the enumerated batch with weights
    pi(i) P(i, j) makes the r-loop solve the projection Pi T (Phi x) exactly.
    """
    if not batch:
        raise ContractViolation("coordinate descent needs a non-empty batch")
    phi = stepper.features.matrix
    rows_i = phi[[t.from_state for t, _ in batch]]
    rows_j = phi[[t.to_state for t, _ in batch]]
    rewards = np.array([t.reward for t, _ in batch])
    weights = np.array([w for _, w in batch])

    beta = stepper.schedule.rate(state.step)
    gamma = stepper.aux_rates.rate(state.step)
    tolerance = stepper.inner_tolerance
    cap_hits = 0

    r, x = state.primary, state.aux
    target = rewards + stepper.discount * (rows_j @ x)
    for _ in range(stepper.inner_cap):
        r_next = r + beta * (rows_i.T @ (weights * (target - rows_i @ r)))
        change = float(np.max(np.abs(r_next - r)))
        r = r_next
        if not np.isfinite(change) or change < tolerance:
            break
    else:
        cap_hits += 1

    fitted = rows_i @ r
    for _ in range(stepper.inner_cap):
        x_next = x + gamma * (rows_i.T @ (weights * (fitted - rows_i @ x)))
        change = float(np.max(np.abs(x_next - x)))
        x = x_next
        if not np.isfinite(change) or change < tolerance:
            break
    else:
        cap_hits += 1

    if cap_hits:
        logger.warning("coordinate_descent.inner_cap_hit", step=state.step, cap=stepper.inner_cap)
    d = float(weights @ (target - rows_i @ state.primary))
    return _successor(state, r, x, d, cap_hits)


STEP_FUNCTIONS: Dict[Algorithm, Callable[[Stepper, EvaluatorState, Transition], EvaluatorState]] = {
    Algorithm.TD0: td0_step,
    Algorithm.TD_LAMBDA: td_lambda_step,
    Algorithm.RESIDUAL_GRADIENT: residual_gradient_step,
    Algorithm.GTD2: gtd2_step,
    Algorithm.ALTERNATING_CD: alternating_cd_step,
    Algorithm.COORDINATE_DESCENT: coordinate_descent_step,
}
