"""
Shared fixtures
"""

from pathlib import Path
from typing import Callable

import numpy as np
import pytest

from tdlab.core.chain import FeatureMap, MarkovRewardProcess, random_chain
from tdlab.services.scenario_service import Scenario, get_scenario_service, three_state_chain as build_three_state_chain

CHAIN_DISCOUNT = 0.9
CHAIN_EPSILON = 0.01
CHAIN_FIXED_POINT = -6.0


@pytest.fixture
def three_state_chain():
    """(mrp, features) of the three-state chain at discount 0.9"""
    return build_three_state_chain(CHAIN_DISCOUNT, CHAIN_EPSILON)


@pytest.fixture
def three_state_scenario() -> Scenario:
    return get_scenario_service().builtin_scenario("paper-3state", CHAIN_DISCOUNT, CHAIN_EPSILON)


@pytest.fixture
def random_chain_factory() -> Callable:
    def factory(n_states: int, n_features: int, seed: int, discount: float = 0.9):
        return random_chain(n_states, n_features, seed, discount)
    return factory


@pytest.fixture
def tmp_config(tmp_path: Path) -> Callable[..., Path]:
    """Write flat key = value text to a file under tmp_path"""
    def write(text: str, name: str = "config.txt") -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path
    return write


@pytest.fixture
def two_state_chain():
    """Two states swapping back and forth, reward 1 from state 0"""
    mrp = MarkovRewardProcess(
        transition=np.array([[0.0, 1.0], [1.0, 0.0]]),
        reward=np.array([[0.0, 1.0], [0.0, 0.0]]),
        discount=0.5,
        weighting=np.array([0.5, 0.5]),
    )
    return mrp, FeatureMap(np.eye(2))
