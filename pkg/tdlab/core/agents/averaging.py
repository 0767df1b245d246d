"""
Run summaries
Polyak-Ruppert tail averaging of the value-estimate parameters and
steps-to-threshold over probe records.
"""

import math
from typing import Optional, Sequence

import numpy as np

from tdlab.core.exceptions import ContractViolation
from tdlab.core.agents.state import EvaluatorState, MetricsRecord


class TailAverage:
    """
    Running mean of state.estimate over steps >= start_step.

    The mean is updated incrementally, xb <- xb + (x - xb) / (count + 1),
    so nothing but the current average is stored.
    """

    def __init__(self, total_steps: int, fraction: float = 0.5):
        if not 0.0 < fraction <= 1.0:
            raise ContractViolation(f"tail fraction must lie in (0, 1], got {fraction}")
        self.fraction = fraction
        self.start_step = max(1, total_steps - math.ceil(fraction * total_steps) + 1)
        self.count = 0
        self._mean: Optional[np.ndarray] = None

    def __call__(self, state: EvaluatorState) -> None:
        if state.step < self.start_step:
            return
        estimate = state.estimate
        if self._mean is None:
            self._mean = np.array(estimate, dtype=np.float64, copy=True)
        else:
            self._mean = self._mean + (estimate - self._mean) / (self.count + 1)
        self.count += 1

    @property
    def value(self) -> Optional[np.ndarray]:
        return None if self._mean is None else self._mean.copy()


def steps_to_threshold(
    records: Sequence[MetricsRecord],
    threshold: float,
    window: int = 1,
) -> Optional[int]:
    """
    Step index of the first probe whose trailing window of mspbe values
    (this probe and the window - 1 before it) has mean <= threshold.
    None when no window qualifies.
    """
    if window < 1:
        raise ContractViolation(f"window must be >= 1, got {window}")
    values = np.array([record.mspbe for record in records], dtype=np.float64)
    if values.size < window:
        return None
    means = np.convolve(values, np.full(window, 1.0 / window), mode="valid")
    hits = np.flatnonzero(means <= threshold)
    if hits.size == 0:
        return None
    return records[int(hits[0]) + window - 1].step_index
