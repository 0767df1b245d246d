"""
Finite Markov models
Reward processes, decision processes, feature maps and weighted norms.

All types are frozen dataclasses over read-only numpy arrays: constructed
once, validated in __post_init__, and safe to share between threads.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from tdlab.core.exceptions import ContractViolation, DegenerateFeaturesError

STOCHASTIC_TOLERANCE = 1e-12


def _frozen(array, ndim: int, name: str) -> np.ndarray:
    out = np.array(array, dtype=np.float64, copy=True)
    if out.ndim != ndim:
        raise ContractViolation(f"{name} must be {ndim}-dimensional, got shape {out.shape}")
    if not np.all(np.isfinite(out)):
        raise ContractViolation(f"{name} has non-finite entries")
    out.setflags(write=False)
    return out


def _check_distribution(vector: np.ndarray, name: str) -> None:
    if np.any(vector < 0.0):
        raise ContractViolation(f"{name} has negative entries")
    total = float(vector.sum())
    if abs(total - 1.0) > STOCHASTIC_TOLERANCE:
        raise ContractViolation(f"{name} sums to {total!r}, expected 1")


def _check_row_stochastic(matrix: np.ndarray, name: str) -> None:
    if np.any(matrix < 0.0) or np.any(matrix > 1.0):
        raise ContractViolation(f"{name} has entries outside [0, 1]")
    sums = matrix.sum(axis=-1)
    worst = np.unravel_index(np.argmax(np.abs(sums - 1.0)), sums.shape)
    if abs(float(sums[worst]) - 1.0) > STOCHASTIC_TOLERANCE:
        row = ".".join(str(int(i)) for i in worst)
        raise ContractViolation(
            f"{name} row {row} sums to {float(sums[worst])!r}, expected 1"
        )


@dataclass(frozen=True, eq=False)
class MarkovRewardProcess:
    """
    Finite Markov reward process under a fixed policy.

    transition[i, j]: probability of moving i -> j (row-stochastic)
    reward[i, j]: reward g(i, j) collected on that transition
    discount: alpha in (0, 1]
    weighting: state distribution pi defining the D-norm; taken as given,
        never derived from the transition matrix
    """

    transition: np.ndarray
    reward: np.ndarray
    discount: float
    weighting: np.ndarray

    def __post_init__(self):
        transition = _frozen(self.transition, 2, "transition")
        n = transition.shape[0]
        if n < 1 or transition.shape != (n, n):
            raise ContractViolation(f"transition must be square, got shape {transition.shape}")
        reward = _frozen(self.reward, 2, "reward")
        if reward.shape != (n, n):
            raise ContractViolation(f"reward must have shape {(n, n)}, got {reward.shape}")
        weighting = _frozen(self.weighting, 1, "weighting")
        if weighting.shape != (n,):
            raise ContractViolation(f"weighting must have length {n}, got {weighting.shape[0]}")
        if not 0.0 < float(self.discount) <= 1.0:
            raise ContractViolation(f"discount must lie in (0, 1], got {self.discount!r}")

        _check_row_stochastic(transition, "transition")
        _check_distribution(weighting, "weighting")

        expected = (transition * reward).sum(axis=1)
        expected.setflags(write=False)

        object.__setattr__(self, "transition", transition)
        object.__setattr__(self, "reward", reward)
        object.__setattr__(self, "weighting", weighting)
        object.__setattr__(self, "discount", float(self.discount))
        object.__setattr__(self, "_expected_reward", expected)

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def expected_reward(self) -> np.ndarray:
        """g_bar(i) = sum_j P(i, j) g(i, j)"""
        return self._expected_reward

    @property
    def norm(self) -> "WeightedNorm":
        return WeightedNorm(self.weighting)

    def with_discount(self, discount: float) -> "MarkovRewardProcess":
        return MarkovRewardProcess(self.transition, self.reward, discount, self.weighting)


@dataclass(frozen=True, eq=False)
class WeightedNorm:
    """D = diag(pi); ||v||_D^2 = sum_i pi(i) v(i)^2"""

    weighting: np.ndarray

    def __post_init__(self):
        weighting = _frozen(self.weighting, 1, "weighting")
        _check_distribution(weighting, "weighting")
        object.__setattr__(self, "weighting", weighting)

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.weighting)

    def squared(self, vector: np.ndarray) -> float:
        return float(np.dot(self.weighting, np.square(vector)))


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """Design matrix Phi (n_states x k) of a linear architecture J = Phi r"""

    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=np.float64, copy=True)
        if matrix.ndim == 1:
            matrix = matrix.reshape(-1, 1)
        matrix = _frozen(matrix, 2, "features")
        n, k = matrix.shape
        if k < 1 or k > n:
            raise ContractViolation(f"features must satisfy 1 <= k <= n_states, got {n}x{k}")
        unused = np.flatnonzero(~np.any(matrix != 0.0, axis=0))
        if unused.size:
            raise ContractViolation(f"feature column {int(unused[0])} is all zero")
        object.__setattr__(self, "matrix", matrix)

    @property
    def n_states(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_features(self) -> int:
        return self.matrix.shape[1]

    def row(self, state: int) -> np.ndarray:
        return self.matrix[state]

    def gram(self, norm: WeightedNorm, max_condition: Optional[float] = None) -> np.ndarray:
        """Phi^T D Phi, optionally guarded by a condition-number bound"""
        if norm.weighting.shape[0] != self.n_states:
            raise ContractViolation(
                f"weighting has {norm.weighting.shape[0]} states, features have {self.n_states}"
            )
        gram = self.matrix.T @ (norm.weighting[:, None] * self.matrix)
        if max_condition is not None:
            condition = float(np.linalg.cond(gram))
            if not np.isfinite(condition) or condition > max_condition:
                raise DegenerateFeaturesError(condition, max_condition)
        return gram


@dataclass(frozen=True, eq=False)
class MarkovDecisionProcess:
    """
    Finite MDP used as the control oracle.

    transition[s, a, s'] and reward[s, a, s']; terminal states are absorbing
    with zero reward and are excluded from policy comparisons.
    """

    transition: np.ndarray
    reward: np.ndarray
    discount: float
    terminal: Optional[np.ndarray] = None

    def __post_init__(self):
        transition = _frozen(self.transition, 3, "transition")
        n, m, n2 = transition.shape
        if n != n2 or m < 1:
            raise ContractViolation(f"transition must have shape (S, A, S), got {transition.shape}")
        reward = _frozen(self.reward, 3, "reward")
        if reward.shape != transition.shape:
            raise ContractViolation(f"reward must have shape {transition.shape}, got {reward.shape}")
        if not 0.0 < float(self.discount) <= 1.0:
            raise ContractViolation(f"discount must lie in (0, 1], got {self.discount!r}")
        _check_row_stochastic(transition, "transition")
        terminal = np.zeros(n, dtype=bool) if self.terminal is None else np.array(self.terminal, dtype=bool)
        if terminal.shape != (n,):
            raise ContractViolation(f"terminal mask must have length {n}")
        terminal.setflags(write=False)
        object.__setattr__(self, "transition", transition)
        object.__setattr__(self, "reward", reward)
        object.__setattr__(self, "terminal", terminal)
        object.__setattr__(self, "discount", float(self.discount))

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[1]
