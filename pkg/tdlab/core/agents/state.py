"""
Evaluator value types
Transitions, evaluator states and probe records.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np


class Algorithm(str, Enum):
    """Online evaluators"""
    TD0 = "td0"
    TD_LAMBDA = "td_lambda"
    RESIDUAL_GRADIENT = "residual_gradient"
    GTD2 = "gtd2"
    ALTERNATING_CD = "alternating_cd"
    COORDINATE_DESCENT = "coordinate_descent"

    @property
    def estimates_with_aux(self) -> bool:
        """The proposed algorithms output J = Phi x, the others J = Phi theta"""
        return self in (Algorithm.ALTERNATING_CD, Algorithm.COORDINATE_DESCENT)


@dataclass(frozen=True)
class Transition:
    """One sampled (i, u?, g, j) tuple"""

    from_state: int
    to_state: int
    reward: float
    step_index: int = 0
    action: Optional[int] = None
    restart: bool = False


@dataclass(frozen=True, eq=False)
class EvaluatorState:
    """
    Parameters of one online evaluator.

    primary: theta (TD, residual gradient, GTD2) or r (coordinate descent)
    aux: x for the coordinate-descent algorithms, w for GTD2,
        the eligibility trace z for TD(lambda), zeros otherwise
    """

    algorithm: Algorithm
    primary: np.ndarray
    aux: np.ndarray
    step: int = 0
    td_error: float = 0.0
    inner_cap_hits: int = 0

    @property
    def estimate(self) -> np.ndarray:
        return self.aux if self.algorithm.estimates_with_aux else self.primary


@dataclass(frozen=True, eq=False)
class MetricsRecord:
    """One probe: exact errors of the current estimate"""

    step_index: int
    primary: np.ndarray
    aux: np.ndarray
    msbe: float
    mspbe: float
    td_error: float
    wall_us: int = 0
