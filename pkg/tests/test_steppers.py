"""
Online linear evaluators: single-step arithmetic, ordering and guards
"""

import numpy as np
import pytest

from tdlab.core.agents import (
    Algorithm,
    StepSizeSchedule,
    Stepper,
    Transition,
    coordinate_descent_td0,
    mspbe_trajectory,
)
from tdlab.core.chain import bellman_apply, exact_value, mspbe, project, projected_value_iteration
from tdlab.core.exceptions import ContractViolation, DivergenceError
from tdlab.services.scenario_service import get_scenario_service
from tdlab.services.stream_service import get_stream_service

CONSTANT_TENTH = StepSizeSchedule(base=0.1)


def _stepper(features, algorithm, discount=0.9, **kwargs):
    kwargs.setdefault("schedule", CONSTANT_TENTH)
    return Stepper(algorithm=algorithm, features=features, discount=discount, **kwargs)


class TestSchedules:
    def test_constant(self):
        assert StepSizeSchedule(base=0.5).rate(1000) == 0.5

    def test_harmonic_is_nonincreasing(self):
        schedule = StepSizeSchedule(kind="harmonic", base=10.0, offset=100.0)
        rates = [schedule.rate(t) for t in range(50)]
        assert rates[0] == pytest.approx(0.1)
        assert all(a >= b > 0 for a, b in zip(rates, rates[1:]))

    def test_rejects_nonpositive_base(self):
        with pytest.raises(ValueError):
            StepSizeSchedule(base=-0.1)


class TestNewState:
    def test_scalar_initial_broadcasts(self, random_chain_factory):
        _, features = random_chain_factory(4, 3, seed=1)
        state = _stepper(features, Algorithm.TD0).new(2.0)
        np.testing.assert_array_equal(state.primary, [2.0, 2.0, 2.0])
        np.testing.assert_array_equal(state.aux, np.zeros(3))
        assert state.step == 0

    def test_coordinate_descent_aux_defaults_to_primary(self, three_state_chain):
        _, features = three_state_chain
        state = _stepper(features, Algorithm.ALTERNATING_CD).new([5.0])
        np.testing.assert_array_equal(state.aux, [5.0])
        np.testing.assert_array_equal(state.estimate, state.aux)

    def test_wrong_length(self, three_state_chain):
        _, features = three_state_chain
        with pytest.raises(ContractViolation, match="initial must have length 1"):
            _stepper(features, Algorithm.TD0).new([1.0, 2.0])

    def test_rejects_lambda_one(self, three_state_chain):
        _, features = three_state_chain
        with pytest.raises(ContractViolation, match="lambda"):
            _stepper(features, Algorithm.TD_LAMBDA, trace_decay=1.0)


class TestTD0:
    def test_single_update(self, three_state_chain):
        _, features = three_state_chain
        stepper = _stepper(features, Algorithm.TD0)
        state = stepper.new([0.0])
        # B -> B: d = 1 + 0.9 * 0 - 0 = 1, theta += 0.1 * 1 * (-1)
        successor = stepper.step(state, Transition(1, 1, 1.0))
        np.testing.assert_allclose(successor.primary, [-0.1])
        assert successor.td_error == pytest.approx(1.0)
        assert successor.step == 1
        np.testing.assert_array_equal(state.primary, [0.0])

    def test_zero_reward_stays_at_zero(self, random_chain_factory):
        mrp, features = random_chain_factory(4, 2, seed=4)
        stepper = _stepper(features, Algorithm.TD0)
        state = stepper.new(0.0)
        for i, j in [(0, 1), (1, 3), (3, 2), (2, 0)]:
            state = stepper.step(state, Transition(i, j, 0.0))
        np.testing.assert_array_equal(state.primary, np.zeros(2))

    def test_transition_outside_chain(self, three_state_chain):
        _, features = three_state_chain
        stepper = _stepper(features, Algorithm.TD0)
        with pytest.raises(ContractViolation, match="outside"):
            stepper.step(stepper.new(0.0), Transition(0, 3, 0.0))

    def test_state_from_other_algorithm(self, three_state_chain):
        _, features = three_state_chain
        td0 = _stepper(features, Algorithm.TD0)
        gtd2 = _stepper(features, Algorithm.GTD2)
        with pytest.raises(ContractViolation, match="state belongs to td0"):
            gtd2.step(td0.new(0.0), Transition(1, 1, 1.0))

    def test_rejects_batches(self, three_state_chain):
        _, features = three_state_chain
        stepper = _stepper(features, Algorithm.TD0)
        with pytest.raises(ContractViolation, match="single transitions"):
            stepper.step(stepper.new(0.0), [(Transition(1, 1, 1.0), 1.0)])


class TestTDLambda:
    def test_lambda_zero_matches_td0(self, three_state_scenario):
        stream = get_stream_service().take(three_state_scenario, seed=3, n=500)
        td0 = _stepper(three_state_scenario.features, Algorithm.TD0)
        td_lambda = _stepper(three_state_scenario.features, Algorithm.TD_LAMBDA, trace_decay=0.0)
        a, b = td0.new([-5.0]), td_lambda.new([-5.0])
        for transition in stream:
            a, b = td0.step(a, transition), td_lambda.step(b, transition)
            np.testing.assert_array_equal(a.primary, b.primary)

    def test_trace_accumulates_and_resets(self, three_state_chain):
        _, features = three_state_chain
        stepper = _stepper(features, Algorithm.TD_LAMBDA, trace_decay=0.5, schedule=StepSizeSchedule(base=1e-9))
        state = stepper.new([0.0])
        state = stepper.step(state, Transition(1, 1, 0.0, restart=True))
        np.testing.assert_allclose(state.aux, [-1.0])
        state = stepper.step(state, Transition(1, 1, 0.0))
        np.testing.assert_allclose(state.aux, [0.45 * -1.0 - 1.0])
        state = stepper.step(state, Transition(2, 2, 0.0, restart=True))
        np.testing.assert_allclose(state.aux, [1.0])

    def test_trace_kept_when_reset_disabled(self, three_state_chain):
        _, features = three_state_chain
        stepper = _stepper(features, Algorithm.TD_LAMBDA, trace_decay=0.5, reset_trace_on_restart=False)
        state = stepper.step(stepper.new([0.0]), Transition(1, 1, 0.0))
        state = stepper.step(state, Transition(2, 2, 0.0, restart=True))
        np.testing.assert_allclose(state.aux, [0.45 * -1.0 + 1.0])


class TestResidualGradient:
    def test_descends_sampled_squared_error(self, three_state_chain):
        _, features = three_state_chain
        stepper = _stepper(features, Algorithm.RESIDUAL_GRADIENT)
        transition = Transition(2, 2, 1.0)
        state = stepper.new([3.0])
        successor = stepper.step(state, transition)

        def squared_error(theta):
            return (1.0 + 0.9 * theta - theta) ** 2

        assert squared_error(successor.primary[0]) < squared_error(state.primary[0])
        # d = 1 - 0.1 * 3 = 0.7, direction = 1 - 0.9 = 0.1
        np.testing.assert_allclose(successor.primary, [3.0 + 0.1 * 0.7 * 0.1])

    def test_zero_reward_no_movement(self, three_state_chain):
        _, features = three_state_chain
        stepper = _stepper(features, Algorithm.RESIDUAL_GRADIENT)
        state = stepper.step(stepper.new([0.0]), Transition(0, 1, 0.0))
        np.testing.assert_array_equal(state.primary, [0.0])


class TestGTD2:
    def test_w_first_then_theta(self, three_state_chain):
        _, features = three_state_chain
        stepper = _stepper(
            features,
            Algorithm.GTD2,
            schedule=StepSizeSchedule(base=2.0),
            aux_schedule=StepSizeSchedule(base=0.5),
        )
        state = stepper.new([1.0], [0.0])
        successor = stepper.step(state, Transition(1, 1, 1.0))
        # d = 1 + 0.9 * (-1) - (-1) = 1.1; w = 0 + 0.5 * (1.1 - 0) * (-1) = -0.55
        np.testing.assert_allclose(successor.aux, [-0.55])
        # theta = 1 + 2 * (phi_i . w') * (phi_i - 0.9 phi_j) = 1 + 2 * 0.55 * (-0.1)
        np.testing.assert_allclose(successor.primary, [1.0 - 0.11])

    def test_zero_correction_leaves_theta(self, three_state_chain):
        _, features = three_state_chain
        stepper = _stepper(features, Algorithm.GTD2)
        state = stepper.step(stepper.new([0.0], [0.0]), Transition(0, 1, 0.0))
        np.testing.assert_array_equal(state.primary, [0.0])
        np.testing.assert_array_equal(state.aux, [0.0])


class TestAlternatingCD:
    def test_r_first_then_x_chases_new_r(self, three_state_chain):
        _, features = three_state_chain
        stepper = _stepper(
            features,
            Algorithm.ALTERNATING_CD,
            schedule=StepSizeSchedule(base=0.5),
            aux_schedule=StepSizeSchedule(base=0.25),
        )
        state = stepper.new([0.0], [2.0])
        successor = stepper.step(state, Transition(2, 2, 1.0))
        # d = 1 + 0.9 * 2 - 0 = 2.8; r = 0 + 0.5 * 2.8 = 1.4
        np.testing.assert_allclose(successor.primary, [1.4])
        # x = 2 - 0.25 * (2 - 1.4) = 1.85
        np.testing.assert_allclose(successor.aux, [1.85])
        assert successor.td_error == pytest.approx(2.8)

    def test_zero_reward_no_movement(self, random_chain_factory):
        _, features = random_chain_factory(3, 2, seed=8)
        stepper = _stepper(features, Algorithm.ALTERNATING_CD)
        state = stepper.new(0.0)
        for i, j in [(0, 1), (1, 2), (2, 2)]:
            state = stepper.step(state, Transition(i, j, 0.0))
        np.testing.assert_array_equal(state.primary, np.zeros(2))
        np.testing.assert_array_equal(state.aux, np.zeros(2))


class TestCoordinateDescent:
    def test_fixed_point_is_stationary(self, three_state_scenario):
        stepper = _stepper(
            three_state_scenario.features,
            Algorithm.COORDINATE_DESCENT,
            schedule=StepSizeSchedule(base=0.5),
            inner_tolerance=1e-12,
        )
        batch = get_scenario_service().expected_batch(three_state_scenario)
        result = coordinate_descent_td0(stepper, [batch], [0.0], [-6.0])
        np.testing.assert_allclose(result.outer_r[-1], [-6.0], atol=1e-10)
        np.testing.assert_allclose(result.outer_x[-1], [-6.0], atol=1e-10)
        assert result.inner_cap_hits == 0

    def test_outer_iterates_are_projected_backups(self, three_state_scenario):
        mrp, features = three_state_scenario.mrp, three_state_scenario.features
        stepper = _stepper(
            features,
            Algorithm.COORDINATE_DESCENT,
            schedule=StepSizeSchedule(base=0.5),
            inner_tolerance=1e-12,
        )
        batch = get_scenario_service().expected_batch(three_state_scenario)
        result = coordinate_descent_td0(stepper, [batch] * 20, [5.0], [5.0])
        phi = features.matrix
        for k in range(20):
            target = project(features, mrp.norm, bellman_apply(mrp, phi @ result.outer_x[k]))
            assert np.max(np.abs(phi @ result.outer_r[k + 1] - phi @ target)) <= 1e-7
        reference = projected_value_iteration(mrp, features, [5.0], 20)
        np.testing.assert_allclose(np.concatenate(result.outer_r), np.concatenate(reference), atol=1e-6)

    def test_zero_rewards_stay_zero(self, random_chain_factory):
        mrp, features = random_chain_factory(3, 2, seed=6)
        stepper = _stepper(features, Algorithm.COORDINATE_DESCENT, schedule=StepSizeSchedule(base=0.1))
        stream = [Transition(0, 1, 0.0), Transition(1, 2, 0.0), Transition(2, 0, 0.0)]
        result = coordinate_descent_td0(stepper, stream, 0.0)
        assert len(result.outer_r) == 4
        for r, x in zip(result.outer_r, result.outer_x):
            np.testing.assert_array_equal(r, np.zeros(2))
            np.testing.assert_array_equal(x, np.zeros(2))

    def test_single_transition_solves_inner_problems(self, three_state_chain):
        _, features = three_state_chain
        stepper = _stepper(
            features,
            Algorithm.COORDINATE_DESCENT,
            schedule=StepSizeSchedule(base=0.5),
            inner_tolerance=1e-13,
        )
        state = stepper.step(stepper.new([0.0], [1.0]), Transition(2, 2, 1.0))
        # target = 1 + 0.9 * 1 = 1.9, solved by r = 1.9 and then x = r
        np.testing.assert_allclose(state.primary, [1.9], atol=1e-12)
        np.testing.assert_allclose(state.aux, [1.9], atol=1e-12)

    def test_inner_cap_is_recorded_not_raised(self, three_state_chain):
        _, features = three_state_chain
        stepper = _stepper(
            features,
            Algorithm.COORDINATE_DESCENT,
            schedule=StepSizeSchedule(base=0.01),
            inner_tolerance=1e-14,
            inner_cap=3,
        )
        result = coordinate_descent_td0(stepper, [Transition(1, 1, 1.0)] * 2, [0.0])
        assert result.inner_cap_hits == 4
        assert result.state.step == 2

    def test_max_outer(self, three_state_scenario):
        stepper = _stepper(three_state_scenario.features, Algorithm.COORDINATE_DESCENT, schedule=StepSizeSchedule(base=0.5))
        batch = get_scenario_service().expected_batch(three_state_scenario)
        result = coordinate_descent_td0(stepper, [batch] * 10, [0.0], max_outer=3)
        assert len(result.outer_r) == 4

    def test_needs_coordinate_descent_stepper(self, three_state_chain):
        _, features = three_state_chain
        with pytest.raises(ContractViolation):
            coordinate_descent_td0(_stepper(features, Algorithm.TD0), [], [0.0])


class TestDivergenceGuard:
    def test_norm_threshold(self, three_state_chain):
        _, features = three_state_chain
        stepper = _stepper(features, Algorithm.TD0, discount=1.0, schedule=StepSizeSchedule(base=1e7))
        state = stepper.new([0.0])
        with pytest.raises(DivergenceError) as info:
            for index in range(1000):
                state = stepper.step(state, Transition(1, 1, 1.0, index))
        assert info.value.step_index == 11
        assert info.value.norm > 1e8

    def test_custom_threshold(self, three_state_chain):
        _, features = three_state_chain
        stepper = _stepper(features, Algorithm.TD0, divergence_threshold=0.05)
        with pytest.raises(DivergenceError, match="diverged at step 1"):
            stepper.step(stepper.new([0.0]), Transition(1, 1, 1.0))


class TestDeterminismAndProbes:
    @pytest.mark.parametrize("algorithm", list(Algorithm))
    def test_identical_streams_identical_parameters(self, three_state_scenario, algorithm):
        stream = get_stream_service().take(three_state_scenario, seed=12, n=200)
        stepper = _stepper(three_state_scenario.features, algorithm, schedule=StepSizeSchedule(base=0.05))
        first, second = stepper.new([1.0]), stepper.new([1.0])
        for transition in stream:
            first, second = stepper.step(first, transition), stepper.step(second, transition)
        np.testing.assert_array_equal(first.primary, second.primary)
        np.testing.assert_array_equal(first.aux, second.aux)

    def test_probe_every_step(self, three_state_scenario):
        stepper = _stepper(three_state_scenario.features, Algorithm.TD0)
        stream = get_stream_service().take(three_state_scenario, seed=1, n=3)
        records = mspbe_trajectory(stepper, three_state_scenario.mrp, stepper.new([0.0]), stream, 1)
        assert [r.step_index for r in records] == [1, 2, 3]

    def test_records_include_final_step(self, three_state_scenario):
        stepper = _stepper(three_state_scenario.features, Algorithm.TD0)
        stream = get_stream_service().take(three_state_scenario, seed=1, n=10)
        records = mspbe_trajectory(stepper, three_state_scenario.mrp, stepper.new([0.0]), stream, 4)
        assert [r.step_index for r in records] == [4, 8, 10]

    def test_probing_does_not_perturb(self, three_state_scenario):
        stepper = _stepper(three_state_scenario.features, Algorithm.GTD2)
        stream = get_stream_service().take(three_state_scenario, seed=5, n=60)
        dense = mspbe_trajectory(stepper, three_state_scenario.mrp, stepper.new([2.0]), stream, 1)
        sparse = mspbe_trajectory(stepper, three_state_scenario.mrp, stepper.new([2.0]), stream, 20)
        by_step = {r.step_index: r for r in dense}
        for record in sparse:
            np.testing.assert_array_equal(record.primary, by_step[record.step_index].primary)
            np.testing.assert_array_equal(record.aux, by_step[record.step_index].aux)

    def test_fixed_point_records(self, two_state_chain):
        mrp, features = two_state_chain
        stepper = _stepper(features, Algorithm.TD0, discount=mrp.discount)
        stream = [Transition(0, 1, 1.0), Transition(1, 0, 0.0)] * 5
        records = mspbe_trajectory(stepper, mrp, stepper.new(exact_value(mrp)), stream, 2)
        assert len(records) == 5
        assert all(record.mspbe <= 1e-10 for record in records)

    def test_records_keep_msbe_above_mspbe(self, three_state_scenario):
        stepper = _stepper(three_state_scenario.features, Algorithm.RESIDUAL_GRADIENT)
        stream = get_stream_service().take(three_state_scenario, seed=2, n=100)
        records = mspbe_trajectory(stepper, three_state_scenario.mrp, stepper.new([5.0]), stream, 10)
        for record in records:
            assert record.msbe >= record.mspbe >= 0.0
            assert record.mspbe == pytest.approx(mspbe(three_state_scenario.mrp, three_state_scenario.features, record.primary))
