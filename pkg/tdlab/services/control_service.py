"""
Control Service - Cooperative Q-factor Runs
Builds the gridworld and Q model named by a ControlConfig, runs the
epsilon-greedy loop and tabulates the episodes.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import pandas as pd
import structlog

from tdlab.core.exceptions import ScenarioError
from tdlab.core.coop import (
    ControlLog,
    ControlSetup,
    ExplorationPolicy,
    GridWorld,
    SgdStep,
    run_control,
    tabular_q_model,
)
from tdlab.schemas.control import ControlConfig
from tdlab.services.scenario_service import get_scenario_service

logger = structlog.get_logger(__name__)

EPISODE_COLUMNS = ["episode", "start_state", "return", "steps", "reached_terminal", "epsilon"]


@dataclass(frozen=True, eq=False)
class ControlResult:
    config: ControlConfig
    grid: GridWorld
    log: ControlLog
    episodes: pd.DataFrame

    @property
    def policy_text(self) -> str:
        return self.grid.render_policy(self.log.policy)


def episode_frame(log: ControlLog) -> pd.DataFrame:
    rows = [
        [e.episode, e.start_state, e.episode_return, e.steps, int(e.reached_terminal), e.epsilon]
        for e in log.episodes
    ]
    return pd.DataFrame(rows, columns=EPISODE_COLUMNS)


class ControlService:
    """Gridworld control with the (r, x) parameter pair"""

    def grid_for(self, config: ControlConfig, base_dir: Optional[Path] = None) -> GridWorld:
        scenario = get_scenario_service().resolve(config.scenario, config.discount, base_dir=base_dir)
        if scenario.gridworld is None:
            raise ScenarioError(f"scenario {scenario.name} is not a control gridworld")
        return scenario.gridworld

    def run(self, config: ControlConfig, base_dir: Optional[Path] = None) -> ControlResult:
        grid = self.grid_for(config, base_dir)
        qmodel = tabular_q_model(grid.n_states, grid.n_actions)
        setup = ControlSetup(
            total_steps=config.steps,
            rates=SgdStep(config.rates.primary, config.rates.aux),
            exploration=ExplorationPolicy(
                config.epsilon.start, config.epsilon.end, config.epsilon.decay_steps
            ),
            max_episode_steps=config.max_episode_steps,
            max_episodes=config.max_episodes,
            target_update=config.target_update,
            initial_value=config.initial_value,
            seed=config.seed,
        )
        logger.info("control.started", scenario=config.scenario, steps=config.steps, seed=config.seed)
        log = run_control(grid, qmodel, setup)
        return ControlResult(config, grid, log, episode_frame(log))


# Singleton
_control_service: Optional[ControlService] = None


def get_control_service() -> ControlService:
    """Get or create control service instance"""
    global _control_service
    if _control_service is None:
        _control_service = ControlService()
    return _control_service
