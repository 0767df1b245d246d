"""
Probed trajectories
Drive a stepper over a transition stream and record exact MSBE/MSPBE of
the current estimate at probe points. Probing reads the state and never
feeds back into it.
"""

import time
from typing import Callable, Iterable, Iterator, List, Optional

from tdlab.core.chain.model import FeatureMap, MarkovRewardProcess
from tdlab.core.chain.operators import msbe, mspbe
from tdlab.core.exceptions import ContractViolation
from tdlab.core.agents.state import EvaluatorState, MetricsRecord, Transition
from tdlab.core.agents.steppers import Stepper

StateObserver = Callable[[EvaluatorState], None]


class Probe:
    """Exact error probe bound to one chain and feature map"""

    def __init__(
        self,
        mrp: MarkovRewardProcess,
        features: FeatureMap,
        record_wall_time: bool = False,
    ):
        self.mrp = mrp
        self.features = features
        self.record_wall_time = record_wall_time
        self._started_ns = time.perf_counter_ns()

    def __call__(self, state: EvaluatorState) -> MetricsRecord:
        estimate = state.estimate
        wall_us = 0
        if self.record_wall_time:
            wall_us = (time.perf_counter_ns() - self._started_ns) // 1000
        return MetricsRecord(
            step_index=state.step,
            primary=state.primary,
            aux=state.aux,
            msbe=msbe(self.mrp, self.features, estimate),
            mspbe=mspbe(self.mrp, self.features, estimate),
            td_error=state.td_error,
            wall_us=int(wall_us),
        )


def iter_trajectory(
    stepper: Stepper,
    state: EvaluatorState,
    stream: Iterable[Transition],
    probe: Probe,
    probe_every: int,
    include_initial: bool = False,
    observer: Optional[StateObserver] = None,
) -> Iterator[MetricsRecord]:
    """
    Yield a record after every step whose index is a multiple of probe_every,
    plus the last step of the stream when it falls between probe points.

    observer, when given, sees every successor state in order.
    """
    if probe_every < 1:
        raise ContractViolation(f"probe_every must be >= 1, got {probe_every}")
    if include_initial:
        yield probe(state)
    probed_at = state.step
    for transition in stream:
        state = stepper.step(state, transition)
        if observer is not None:
            observer(state)
        if state.step % probe_every == 0:
            probed_at = state.step
            yield probe(state)
    if state.step != probed_at:
        yield probe(state)


def mspbe_trajectory(
    stepper: Stepper,
    mrp: MarkovRewardProcess,
    state: EvaluatorState,
    stream: Iterable[Transition],
    probe_every: int,
) -> List[MetricsRecord]:
    """Materialized iter_trajectory without the step-0 record"""
    probe = Probe(mrp, stepper.features)
    return list(iter_trajectory(stepper, state, stream, probe, probe_every))
