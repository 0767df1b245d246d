"""
Gridworld model and the cooperative Q-factor control loop
"""

import numpy as np
import pytest

from tdlab.core.chain import optimal_actions, value_iteration
from tdlab.core.coop import (
    ControlSetup,
    ExplorationPolicy,
    GridWorld,
    Move,
    SgdStep,
    TargetUpdate,
    greedy_policy,
    greedy_rollout,
    run_control,
    tabular_q_model,
)
from tdlab.core.exceptions import ContractViolation, ScenarioError
from tdlab.schemas.control import ControlConfig
from tdlab.services import get_control_service, get_scenario_service


class TestGridWorld:
    def test_default_terminal_is_far_corner(self):
        grid = GridWorld(4, 3)
        assert grid.terminals == ((2, 3),)
        assert grid.is_terminal(11)
        assert grid.terminal_mask.sum() == 1

    def test_moves_clip_at_walls(self):
        grid = GridWorld(4, 4)
        assert grid.move(0, Move.UP) == (0, -1.0)
        assert grid.move(0, Move.LEFT) == (0, -1.0)
        assert grid.move(0, Move.RIGHT) == (1, -1.0)
        assert grid.move(0, Move.DOWN) == (4, -1.0)

    def test_terminal_absorbs(self):
        grid = GridWorld(4, 4)
        for action in Move:
            assert grid.move(15, action) == (15, 0.0)

    def test_to_mdp(self):
        grid = GridWorld(3, 2)
        mdp = grid.to_mdp()
        assert mdp.transition.shape == (6, 4, 6)
        np.testing.assert_allclose(mdp.transition.sum(axis=2), np.ones((6, 4)))
        assert mdp.terminal.tolist() == [False] * 5 + [True]
        assert mdp.reward[0, Move.RIGHT, 1] == -1.0

    def test_shortest_distances(self):
        grid = GridWorld(4, 4)
        distances = grid.shortest_distances()
        assert distances[0] == 6
        assert distances[14] == 1
        assert distances[15] == 0

    def test_render_policy(self):
        grid = GridWorld(2, 2)
        policy = np.array([Move.RIGHT, Move.DOWN, Move.RIGHT, 0])
        assert grid.render_policy(policy) == "> v\n> *\n"

    def test_out_of_range_terminal(self):
        with pytest.raises(ContractViolation, match="outside"):
            GridWorld(2, 2, terminals=((2, 0),))

    def test_every_cell_terminal(self):
        with pytest.raises(ContractViolation, match="every cell"):
            GridWorld(2, 1, terminals=((0, 0), (0, 1)))

    def test_single_cell(self):
        with pytest.raises(ContractViolation):
            GridWorld(1, 1)

    def test_builtin_name_is_width_by_height(self):
        scenario = get_scenario_service().builtin_scenario("gridworld-3x2", 0.9)
        assert scenario.gridworld.width == 3
        assert scenario.gridworld.height == 2
        assert not scenario.is_linear


class TestValueIterationOracle:
    def test_values_are_discounted_path_costs(self):
        grid = GridWorld(4, 4)
        result = value_iteration(grid.to_mdp())
        distances = grid.shortest_distances()
        expected = -(1.0 - 0.9 ** distances) / 0.1
        np.testing.assert_allclose(result.values, expected, atol=1e-9)

    def test_ties_are_reported(self):
        grid = GridWorld(4, 4)
        actions = optimal_actions(value_iteration(grid.to_mdp()).q_values)
        assert actions[0] == {Move.DOWN, Move.RIGHT}
        assert actions[11] == {Move.DOWN}


class TestExploration:
    def test_linear_decay(self):
        policy = ExplorationPolicy(1.0, 0.1, 100)
        assert policy.epsilon(0) == 1.0
        assert policy.epsilon(50) == pytest.approx(0.55)
        assert policy.epsilon(100) == 0.1
        assert policy.epsilon(10_000) == 0.1

    def test_no_decay(self):
        assert ExplorationPolicy(1.0, 0.2, 0).epsilon(0) == 0.2

    def test_rejects_epsilon(self):
        with pytest.raises(ContractViolation):
            ExplorationPolicy(start=1.5)


class TestRunControl:
    def test_episode_bookkeeping(self):
        grid = GridWorld(3, 3)
        setup = ControlSetup(total_steps=2_000, rates=SgdStep(0.5, 0.5), max_episode_steps=20, seed=4)
        log = run_control(grid, tabular_q_model(grid.n_states, grid.n_actions), setup)
        assert log.total_steps == 2_000
        assert log.episodes
        for record in log.episodes:
            assert 1 <= record.steps <= 20
            assert record.reached_terminal or record.steps == 20
            assert record.episode_return == -record.steps
            assert not grid.is_terminal(record.start_state)

    def test_max_episodes_stops_early(self):
        grid = GridWorld(3, 3)
        setup = ControlSetup(total_steps=10_000, rates=SgdStep(0.5, 0.5), max_episodes=3, seed=1)
        log = run_control(grid, tabular_q_model(grid.n_states, grid.n_actions), setup)
        assert len(log.episodes) == 3
        assert log.total_steps < 10_000

    def test_deterministic_per_seed(self):
        grid = GridWorld(3, 3)
        setup = ControlSetup(total_steps=1_000, rates=SgdStep(0.5, 0.5), seed=9)
        first = run_control(grid, tabular_q_model(9, 4), setup)
        second = run_control(grid, tabular_q_model(9, 4), setup)
        np.testing.assert_array_equal(first.primary, second.primary)
        np.testing.assert_array_equal(first.aux, second.aux)
        assert first.episodes == second.episodes

    def test_action_count_mismatch(self):
        grid = GridWorld(3, 3)
        setup = ControlSetup(total_steps=10, rates=SgdStep(0.5, 0.5))
        with pytest.raises(ContractViolation, match="actions"):
            run_control(grid, tabular_q_model(9, 2), setup)

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", range(5))
    @pytest.mark.parametrize("target_update", list(TargetUpdate))
    def test_learns_an_optimal_policy(self, seed, target_update):
        grid = GridWorld(4, 4)
        qmodel = tabular_q_model(grid.n_states, grid.n_actions)
        setup = ControlSetup(
            total_steps=50_000,
            rates=SgdStep(0.5, 0.5),
            exploration=ExplorationPolicy(1.0, 0.1, 25_000),
            target_update=target_update,
            seed=seed,
        )
        log = run_control(grid, qmodel, setup)

        optimal = optimal_actions(value_iteration(grid.to_mdp()).q_values)
        for state in range(grid.n_states):
            if not grid.is_terminal(state):
                assert int(log.policy[state]) in optimal[state], f"state {state}"

        distances = grid.shortest_distances()
        for start in range(grid.n_states):
            path = greedy_rollout(qmodel, log.primary, grid, start)
            assert len(path) - 1 == distances[start]

    @pytest.mark.parametrize("target_update", list(TargetUpdate))
    def test_one_decision_grid(self, target_update):
        grid = GridWorld(2, 1)
        assert grid.terminals == ((0, 1),)
        setup = ControlSetup(
            total_steps=100_000,
            rates=SgdStep(0.5, 0.5),
            exploration=ExplorationPolicy(1.0, 0.1, 200),
            max_episodes=100,
            target_update=target_update,
            seed=3,
        )
        log = run_control(grid, tabular_q_model(grid.n_states, grid.n_actions), setup)
        assert len(log.episodes) == 100
        assert log.policy[0] == Move.RIGHT
        assert optimal_actions(value_iteration(grid.to_mdp()).q_values)[0] == {Move.RIGHT}

    @pytest.mark.slow
    def test_windowed_mean_return_holds_after_decay(self):
        grid = GridWorld(4, 4)
        window = 10
        window_means, settled = [], 0
        for seed in range(5):
            setup = ControlSetup(
                total_steps=50_000,
                rates=SgdStep(0.5, 0.5),
                exploration=ExplorationPolicy(1.0, 0.1, 25_000),
                seed=seed,
            )
            log = run_control(grid, tabular_q_model(grid.n_states, grid.n_actions), setup)
            returns = np.array([record.episode_return for record in log.episodes])
            n_windows = len(returns) // window
            window_means.append(returns[: n_windows * window].reshape(n_windows, window).mean(axis=1))
            first_decayed = next(k for k, record in enumerate(log.episodes) if record.epsilon <= 0.1)
            settled = max(settled, first_decayed // window + 1)

        shortest = min(len(m) for m in window_means)
        means = np.mean([m[:shortest] for m in window_means], axis=0)
        after = means[settled:]

        assert means[0] < after.mean() - 5.0
        assert np.polyfit(np.arange(len(means)), means, 1)[0] >= 0.0
        # no window falls more than 3 moves below the best window before it
        assert np.max(np.maximum.accumulate(after) - after) <= 3.0
        # oracle: mean shortest distance over uniform non-terminal starts
        distances = grid.shortest_distances()[~grid.terminal_mask]
        assert after.mean() >= -distances.mean() - 2.0

    def test_greedy_policy_breaks_ties_low(self):
        grid = GridWorld(2, 2)
        qmodel = tabular_q_model(4, 4)
        policy = greedy_policy(qmodel, np.zeros(16), grid)
        np.testing.assert_array_equal(policy, [0, 0, 0, 0])


class TestControlService:
    def test_run_tabulates_episodes(self):
        config = ControlConfig(scenario="gridworld-3x3", steps=3_000, max_episode_steps=30, seed=2)
        result = get_control_service().run(config)
        assert list(result.episodes.columns) == [
            "episode", "start_state", "return", "steps", "reached_terminal", "epsilon",
        ]
        assert len(result.episodes) == len(result.log.episodes)
        assert result.policy_text.count("\n") == 3
        assert result.policy_text.rstrip().endswith("*")

    def test_decay_defaults_to_half_the_steps(self):
        assert ControlConfig(steps=1_000).epsilon.decay_steps == 500

    def test_linear_scenario_is_rejected(self):
        with pytest.raises(ScenarioError, match="not a control gridworld"):
            get_control_service().grid_for(ControlConfig(scenario="paper-3state"))
