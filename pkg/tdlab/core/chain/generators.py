"""
Random chain generator
Seeded valid chains for property tests and the random-chain scenario.
"""

from typing import Tuple

import numpy as np
from scipy import linalg

from tdlab.core.exceptions import ContractViolation
from tdlab.core.chain.model import FeatureMap, MarkovRewardProcess


def make_rng(seed: int) -> np.random.Generator:
    """Philox-4x64 counter-based generator; part of the reproducibility contract"""
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


def stationary_distribution(transition: np.ndarray) -> np.ndarray:
    """Solve pi^T P = pi^T with sum(pi) = 1 (unique for irreducible P)"""
    n = transition.shape[0]
    system = transition.T - np.eye(n)
    system[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    pi = np.clip(linalg.solve(system, rhs), 0.0, None)
    return pi / pi.sum()


def random_chain(
    n_states: int,
    n_features: int,
    seed: int,
    discount: float = 0.9,
) -> Tuple[MarkovRewardProcess, FeatureMap]:
    """
    Dirichlet transition rows, standard-normal rewards and features.

    The weighting is the stationary distribution of P, which keeps
    A = Phi^T D (I - alpha P) Phi positive definite.
    """
    if n_states < 1 or not 1 <= n_features <= n_states:
        raise ContractViolation(
            f"random chain needs 1 <= k <= n, got n={n_states}, k={n_features}"
        )
    rng = make_rng(seed)
    transition = rng.dirichlet(np.ones(n_states), size=n_states)
    reward = rng.standard_normal((n_states, n_states))
    features = rng.standard_normal((n_states, n_features))
    weighting = stationary_distribution(transition)
    mrp = MarkovRewardProcess(transition, reward, discount, weighting)
    return mrp, FeatureMap(features)
