"""
Stream Service - Seeded Transition Streams
Draws Transition sequences from a linear scenario.

Regimes:
1. iid_weighted - every step draws i ~ pi, then j ~ P(i, .)
2. trajectory - follows P from the restart distribution; restarts after
   episode_cap steps or after the self-loop of an absorbing state

Both consume uniforms in fixed-size blocks from a Philox generator, so a
stream of n transitions is a prefix of every longer stream with the same seed.
"""

from typing import Iterator, List, Optional

import numpy as np
import structlog

from tdlab.core.chain import make_rng
from tdlab.core.exceptions import ContractViolation, ScenarioError
from tdlab.core.agents import Transition
from tdlab.schemas.experiment import SamplingRegime
from tdlab.services.scenario_service import Scenario

logger = structlog.get_logger(__name__)

RNG_NAME = "philox4x64"
BLOCK = 4096

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def derive_seed(parent: int, index: int) -> int:
    """
    SplitMix64 finalizer over parent XOR golden_gamma * (index + 1).

    Distinct run indices give well-separated child seeds without any
    extra configuration.
    """
    z = (int(parent) ^ (GOLDEN_GAMMA * (index + 1))) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class _Sampler:
    """Inverse-CDF draws that never land on zero-probability outcomes"""

    def __init__(self, probabilities: np.ndarray):
        self.cdf = np.cumsum(probabilities, axis=-1)
        self.last = np.array([np.flatnonzero(row > 0)[-1] for row in np.atleast_2d(probabilities)])

    def draw(self, u: float, row: int = 0) -> int:
        cdf = np.atleast_2d(self.cdf)[row]
        index = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
        return min(index, int(self.last[row]))


class StreamService:
    """Transition streams for linear scenarios"""

    rng_name = RNG_NAME

    def transition_stream(
        self,
        scenario: Scenario,
        seed: int,
        n: Optional[int] = None,
    ) -> Iterator[Transition]:
        """Lazily yield n transitions (endless when n is None)"""
        if not scenario.is_linear:
            raise ScenarioError(f"scenario {scenario.name} has no transition chain")
        if n is not None and n < 1:
            raise ContractViolation(f"stream length must be >= 1, got {n}")
        if scenario.sampling is SamplingRegime.TRAJECTORY:
            return self._trajectory(scenario, seed, n)
        return self._iid(scenario, seed, n)

    def take(self, scenario: Scenario, seed: int, n: int) -> List[Transition]:
        return list(self.transition_stream(scenario, seed, n))

    def _uniforms(self, seed: int) -> Iterator[np.ndarray]:
        rng = make_rng(seed)
        while True:
            for pair in rng.random((BLOCK, 2)):
                yield pair

    def _iid(self, scenario: Scenario, seed: int, n: Optional[int]) -> Iterator[Transition]:
        mrp = scenario.mrp
        states = _Sampler(mrp.weighting)
        successors = _Sampler(mrp.transition)
        for step, (u_state, u_next) in enumerate(self._uniforms(seed)):
            if n is not None and step >= n:
                return
            i = states.draw(u_state)
            j = successors.draw(u_next, i)
            yield Transition(i, j, float(mrp.reward[i, j]), step, restart=(step == 0))

    def _trajectory(self, scenario: Scenario, seed: int, n: Optional[int]) -> Iterator[Transition]:
        mrp = scenario.mrp
        starts = _Sampler(scenario.restart)
        successors = _Sampler(mrp.transition)
        absorbing = np.isclose(np.diag(mrp.transition), 1.0, rtol=0.0, atol=1e-12)
        state, episode_steps = None, 0
        for step, (u_start, u_next) in enumerate(self._uniforms(seed)):
            if n is not None and step >= n:
                return
            restart = state is None
            if restart:
                state, episode_steps = starts.draw(u_start), 0
            j = successors.draw(u_next, state)
            yield Transition(state, j, float(mrp.reward[state, j]), step, restart=restart)
            episode_steps += 1
            if episode_steps >= scenario.episode_cap or (absorbing[state] and j == state):
                state = None
            else:
                state = j


# Singleton
_stream_service: Optional[StreamService] = None


def get_stream_service() -> StreamService:
    """Get or create stream service instance"""
    global _stream_service
    if _stream_service is None:
        _stream_service = StreamService()
    return _stream_service
