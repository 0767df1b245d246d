"""
Differentiable approximators
Value and gradient contracts for the cooperative two-parameter-set update,
with a finite-difference self-test every shipped approximator must pass.
"""

from dataclasses import dataclass
from typing import Any, Hashable, Iterable, Protocol, Tuple, runtime_checkable

import numpy as np
import structlog

from tdlab.core.chain.model import FeatureMap
from tdlab.core.exceptions import ContractViolation

logger = structlog.get_logger(__name__)

StateAction = Tuple[int, int]


@runtime_checkable
class DifferentiableApproximator(Protocol):
    """J(input, params) with its gradient in params"""

    @property
    def params_dim(self) -> int: ...

    def value(self, inputs: Any, params: np.ndarray) -> float: ...

    def gradient(self, inputs: Any, params: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True, eq=False)
class LinearApproximator:
    """J(i, p) = phi(i)^T p"""

    features: FeatureMap

    @property
    def params_dim(self) -> int:
        return self.features.n_features

    def value(self, inputs: int, params: np.ndarray) -> float:
        return self.features.row(inputs) @ params

    def gradient(self, inputs: int, params: np.ndarray) -> np.ndarray:
        return self.features.row(inputs)


@dataclass(frozen=True, eq=False)
class QuadraticApproximator:
    """J(i, p) = phi(i)^T (p * p), nonlinear in p"""

    features: FeatureMap

    @property
    def params_dim(self) -> int:
        return self.features.n_features

    def value(self, inputs: int, params: np.ndarray) -> float:
        return float(self.features.row(inputs) @ (params * params))

    def gradient(self, inputs: int, params: np.ndarray) -> np.ndarray:
        return 2.0 * params * self.features.row(inputs)


@dataclass(frozen=True)
class TabularQApproximator:
    """One parameter per (state, action): Q(s, a, p) = p[s * n_actions + a]"""

    n_states: int
    n_actions: int

    def __post_init__(self):
        if self.n_states < 1 or self.n_actions < 1:
            raise ContractViolation(
                f"tabular Q needs positive sizes, got {self.n_states}x{self.n_actions}"
            )

    @property
    def params_dim(self) -> int:
        return self.n_states * self.n_actions

    def index(self, inputs: StateAction) -> int:
        state, action = inputs
        if not (0 <= state < self.n_states and 0 <= action < self.n_actions):
            raise ContractViolation(f"state-action {inputs} outside the table")
        return state * self.n_actions + action

    def value(self, inputs: StateAction, params: np.ndarray) -> float:
        return float(params[self.index(inputs)])

    def gradient(self, inputs: StateAction, params: np.ndarray) -> np.ndarray:
        grad = np.zeros(self.params_dim)
        grad[self.index(inputs)] = 1.0
        return grad


@dataclass(frozen=True, eq=False)
class QFactorModel:
    """A differentiable approximator over (state, action) pairs with m actions"""

    approximator: DifferentiableApproximator
    n_actions: int

    def __post_init__(self):
        if self.n_actions < 1:
            raise ContractViolation(f"a Q-factor model needs >= 1 action, got {self.n_actions}")

    @property
    def params_dim(self) -> int:
        return self.approximator.params_dim

    def value(self, inputs: StateAction, params: np.ndarray) -> float:
        return self.approximator.value(inputs, params)

    def gradient(self, inputs: StateAction, params: np.ndarray) -> np.ndarray:
        return self.approximator.gradient(inputs, params)

    def q_values(self, state: int, params: np.ndarray) -> np.ndarray:
        values = np.array(
            [self.approximator.value((state, action), params) for action in range(self.n_actions)],
            dtype=np.float64,
        )
        if not np.all(np.isfinite(values)):
            raise ContractViolation(f"non-finite Q-values at state {state}")
        return values


def tabular_q_model(n_states: int, n_actions: int) -> QFactorModel:
    return QFactorModel(TabularQApproximator(n_states, n_actions), n_actions)


def self_test(
    approximator: DifferentiableApproximator,
    probes: Iterable[Hashable],
    rng: np.random.Generator,
    tolerance: float = 1e-5,
    step: float = 1e-6,
    scale: float = 1.0,
) -> float:
    """
    Compare gradient() against central differences of value() at random
    parameters for every probe input. Returns the largest relative error and
    raises ContractViolation when it exceeds tolerance.
    """
    dim = approximator.params_dim
    worst = 0.0
    for inputs in probes:
        params = scale * rng.standard_normal(dim)
        analytic = np.asarray(approximator.gradient(inputs, params), dtype=np.float64)
        numeric = np.empty(dim)
        for k in range(dim):
            bump = np.zeros(dim)
            bump[k] = step
            numeric[k] = (
                approximator.value(inputs, params + bump) - approximator.value(inputs, params - bump)
            ) / (2.0 * step)
        denominator = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-8)
        worst = max(worst, float(np.linalg.norm(analytic - numeric) / denominator))

    if worst > tolerance:
        logger.warning(
            "approximator.self_test_failed",
            approximator=type(approximator).__name__,
            relative_error=worst,
        )
        raise ContractViolation(
            f"{type(approximator).__name__} gradient disagrees with finite differences "
            f"(relative error {worst:.3g} > {tolerance:.3g})"
        )
    return worst
