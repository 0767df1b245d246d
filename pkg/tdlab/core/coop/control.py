"""
Cooperative Q-factor control loop
epsilon-greedy episodes on a gridworld, updating (r, x) with coop_q_step
after every move.
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import structlog

from tdlab.core.chain.generators import make_rng
from tdlab.core.exceptions import ContractViolation
from tdlab.core.agents.state import Transition
from tdlab.core.coop.approximators import QFactorModel
from tdlab.core.coop.gridworld import GridWorld
from tdlab.core.coop.updates import SgdStep, TargetUpdate, coop_q_step, epsilon_greedy_action

logger = structlog.get_logger(__name__)


@dataclass(frozen=True)
class ExplorationPolicy:
    """epsilon decaying linearly from start to end over decay_steps, then held"""

    start: float = 1.0
    end: float = 0.1
    decay_steps: int = 10_000

    def __post_init__(self):
        for name in ("start", "end"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ContractViolation(f"epsilon {name} must lie in [0, 1], got {value}")
        if self.decay_steps < 0:
            raise ContractViolation(f"decay_steps must be >= 0, got {self.decay_steps}")

    def epsilon(self, step: int) -> float:
        if self.decay_steps == 0 or step >= self.decay_steps:
            return self.end
        return self.start + (self.end - self.start) * step / self.decay_steps


@dataclass(frozen=True)
class ControlSetup:
    total_steps: int
    rates: SgdStep
    exploration: ExplorationPolicy = field(default_factory=ExplorationPolicy)
    max_episode_steps: int = 100
    max_episodes: Optional[int] = None
    target_update: TargetUpdate = TargetUpdate.OPTIMIZE
    initial_value: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.total_steps < 1:
            raise ContractViolation(f"total_steps must be >= 1, got {self.total_steps}")
        if self.max_episode_steps < 1:
            raise ContractViolation(f"max_episode_steps must be >= 1, got {self.max_episode_steps}")


@dataclass(frozen=True)
class EpisodeRecord:
    episode: int
    start_state: int
    episode_return: float
    steps: int
    reached_terminal: bool
    epsilon: float


@dataclass(frozen=True, eq=False)
class ControlLog:
    episodes: List[EpisodeRecord]
    primary: np.ndarray
    aux: np.ndarray
    policy: np.ndarray
    total_steps: int


def greedy_policy(qmodel: QFactorModel, params: np.ndarray, grid: GridWorld) -> np.ndarray:
    """argmax action per cell, lowest index on ties; terminal cells get 0"""
    policy = np.zeros(grid.n_states, dtype=np.int64)
    for s in range(grid.n_states):
        if not grid.is_terminal(s):
            policy[s] = int(np.argmax(qmodel.q_values(s, params)))
    return policy


def greedy_rollout(
    qmodel: QFactorModel,
    params: np.ndarray,
    grid: GridWorld,
    start: int,
    max_steps: int = 1_000,
) -> List[int]:
    """States visited by the deterministic greedy policy, start included"""
    policy = greedy_policy(qmodel, params, grid)
    path = [start]
    state = start
    while not grid.is_terminal(state) and len(path) <= max_steps:
        state, _ = grid.move(state, int(policy[state]))
        path.append(state)
    return path


def run_control(grid: GridWorld, qmodel: QFactorModel, setup: ControlSetup) -> ControlLog:
    """
    Episodes start uniformly over non-terminal cells and end on a terminal
    cell or after max_episode_steps moves. Actions come from the r-set.
    """
    if qmodel.n_actions != grid.n_actions:
        raise ContractViolation(
            f"Q model has {qmodel.n_actions} actions, gridworld has {grid.n_actions}"
        )
    rng = make_rng(setup.seed)
    starts = np.flatnonzero(~grid.terminal_mask)
    r = np.full(qmodel.params_dim, setup.initial_value, dtype=np.float64)
    x = r.copy()

    episodes: List[EpisodeRecord] = []
    state = int(rng.choice(starts))
    start_state, episode_return, episode_steps = state, 0.0, 0
    steps_taken = 0

    for step in range(setup.total_steps):
        epsilon = setup.exploration.epsilon(step)
        action = epsilon_greedy_action(qmodel, r, state, epsilon, rng)
        successor, reward = grid.move(state, action)
        terminal = grid.is_terminal(successor)
        transition = Transition(state, successor, reward, step, action)
        r, x = coop_q_step(
            r, x, transition, qmodel, setup.rates, grid.discount, terminal, setup.target_update
        )
        steps_taken = step + 1
        episode_return += reward
        episode_steps += 1

        if terminal or episode_steps >= setup.max_episode_steps:
            episodes.append(
                EpisodeRecord(len(episodes), start_state, episode_return, episode_steps, terminal, epsilon)
            )
            if setup.max_episodes is not None and len(episodes) >= setup.max_episodes:
                break
            state = int(rng.choice(starts))
            start_state, episode_return, episode_steps = state, 0.0, 0
        else:
            state = successor

    policy = greedy_policy(qmodel, r, grid)
    logger.info(
        "control.completed",
        steps=steps_taken,
        episodes=len(episodes),
        target_update=setup.target_update.value,
    )
    return ControlLog(episodes, r, x, policy, steps_taken)
