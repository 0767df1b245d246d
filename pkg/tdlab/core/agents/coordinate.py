"""
Coordinate Descent TD(0)
Outer loop of coordinate descent TD(0): each outer iteration consumes one transition batch,
runs the r-loop against the frozen x, then the x-loop against the new r.
"""

from dataclasses import dataclass
from typing import Iterable, List, Optional, Union

import numpy as np
import structlog

from tdlab.core.exceptions import ContractViolation
from tdlab.core.agents.state import Algorithm, EvaluatorState, Transition
from tdlab.core.agents.steppers import Stepper, WeightedBatch

logger = structlog.get_logger(__name__)

Batch = Union[Transition, WeightedBatch]


@dataclass(frozen=True, eq=False)
class CoordinateDescentResult:
    """Outer sequences (r_0, r_1, ...) and (x_0, x_1, ...) plus the final state"""

    state: EvaluatorState
    outer_r: List[np.ndarray]
    outer_x: List[np.ndarray]

    @property
    def inner_cap_hits(self) -> int:
        return self.state.inner_cap_hits


def coordinate_descent_td0(
    stepper: Stepper,
    stream: Iterable[Batch],
    r0,
    x0=None,
    max_outer: Optional[int] = None,
) -> CoordinateDescentResult:
    """
    Run coordinate descent TD(0) over a stream of batches.

    A bare Transition counts as a batch of one with weight 1. Reaching the
    inner cap is recorded on the state and logged, never raised.
    """
    if stepper.algorithm is not Algorithm.COORDINATE_DESCENT:
        raise ContractViolation(
            f"coordinate descent needs a coordinate_descent stepper, got {stepper.algorithm.value}"
        )
    state = stepper.new(r0, x0)
    outer_r = [state.primary]
    outer_x = [state.aux]

    for index, batch in enumerate(stream):
        if max_outer is not None and index >= max_outer:
            break
        weighted = [(batch, 1.0)] if isinstance(batch, Transition) else list(batch)
        state = stepper.step(state, weighted)
        outer_r.append(state.primary)
        outer_x.append(state.aux)

    if state.inner_cap_hits:
        logger.warning(
            "coordinate_descent.finished_with_cap_hits",
            outer_iterations=state.step,
            inner_cap_hits=state.inner_cap_hits,
        )
    return CoordinateDescentResult(state, outer_r, outer_x)
