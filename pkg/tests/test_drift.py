"""
Expected one-step updates: enumeration oracle against closed forms
"""

import numpy as np
import pytest

from tdlab.core.agents import (
    Algorithm,
    EvaluatorState,
    StepSizeSchedule,
    Stepper,
    expected_update,
    mean_drift,
    transition_weights,
)
from tdlab.core.chain import td_system
from tdlab.core.exceptions import ContractViolation


def _state(algorithm, primary, aux):
    return EvaluatorState(algorithm, np.array(primary, dtype=float), np.array(aux, dtype=float), step=7)


def _stepper(features, algorithm, discount, **kwargs):
    return Stepper(
        algorithm=algorithm,
        features=features,
        discount=discount,
        schedule=StepSizeSchedule(base=0.3),
        aux_schedule=StepSizeSchedule(base=0.2),
        **kwargs,
    )


class TestThreeStateChain:
    @pytest.mark.parametrize("algorithm", [
        Algorithm.TD0,
        Algorithm.RESIDUAL_GRADIENT,
        Algorithm.GTD2,
        Algorithm.ALTERNATING_CD,
    ])
    @pytest.mark.parametrize("primary,aux", [([5.0], [0.0]), ([-1.0], [2.5]), ([-6.0], [-6.0])])
    def test_enumeration_matches_closed_form(self, three_state_chain, algorithm, primary, aux):
        mrp, features = three_state_chain
        stepper = _stepper(features, algorithm, mrp.discount)
        state = _state(algorithm, primary, aux)
        for oracle, formula in zip(expected_update(stepper, state, mrp), mean_drift(stepper, state, mrp)):
            np.testing.assert_allclose(oracle, formula, atol=1e-10)

    def test_td_lambda(self, three_state_chain):
        mrp, features = three_state_chain
        stepper = _stepper(features, Algorithm.TD_LAMBDA, mrp.discount, trace_decay=0.6)
        state = _state(Algorithm.TD_LAMBDA, [2.0], [-0.7])
        for oracle, formula in zip(expected_update(stepper, state, mrp), mean_drift(stepper, state, mrp)):
            np.testing.assert_allclose(oracle, formula, atol=1e-10)

    def test_coordinate_descent(self, three_state_chain):
        mrp, features = three_state_chain
        stepper = Stepper(
            algorithm=Algorithm.COORDINATE_DESCENT,
            features=features,
            discount=mrp.discount,
            schedule=StepSizeSchedule(base=0.5),
            inner_tolerance=1e-13,
        )
        state = _state(Algorithm.COORDINATE_DESCENT, [1.0], [3.0])
        for oracle, formula in zip(expected_update(stepper, state, mrp), mean_drift(stepper, state, mrp)):
            np.testing.assert_allclose(oracle, formula, atol=1e-10)

    def test_td0_drift_is_td_system(self, three_state_chain):
        mrp, features = three_state_chain
        stepper = _stepper(features, Algorithm.TD0, mrp.discount)
        state = _state(Algorithm.TD0, [-5.0], [0.0])
        A, b = td_system(mrp, features)
        d_theta, _ = expected_update(stepper, state, mrp)
        np.testing.assert_allclose(d_theta, 0.3 * (b - A @ state.primary), atol=1e-12)

    def test_fixed_point_has_zero_drift(self, three_state_chain):
        mrp, features = three_state_chain
        stepper = _stepper(features, Algorithm.ALTERNATING_CD, mrp.discount)
        d_r, d_x = mean_drift(stepper, _state(Algorithm.ALTERNATING_CD, [-6.0], [-6.0]), mrp)
        np.testing.assert_allclose(d_r, [0.0], atol=1e-12)
        np.testing.assert_allclose(d_x, [0.0], atol=1e-12)


class TestRandomChains:
    @pytest.mark.parametrize("seed", range(5))
    @pytest.mark.parametrize("algorithm", [
        Algorithm.TD0,
        Algorithm.RESIDUAL_GRADIENT,
        Algorithm.GTD2,
        Algorithm.ALTERNATING_CD,
    ])
    def test_enumeration_matches_closed_form(self, random_chain_factory, seed, algorithm):
        mrp, features = random_chain_factory(5, 2, seed, 0.85)
        stepper = _stepper(features, algorithm, mrp.discount)
        rng = np.random.default_rng(seed)
        state = _state(algorithm, rng.normal(size=2), rng.normal(size=2))
        for oracle, formula in zip(expected_update(stepper, state, mrp), mean_drift(stepper, state, mrp)):
            np.testing.assert_allclose(oracle, formula, atol=1e-10)

    @pytest.mark.parametrize("seed", range(3))
    def test_td_lambda(self, random_chain_factory, seed):
        mrp, features = random_chain_factory(4, 2, seed, 0.7)
        stepper = _stepper(features, Algorithm.TD_LAMBDA, mrp.discount, trace_decay=0.4)
        rng = np.random.default_rng(seed)
        state = _state(Algorithm.TD_LAMBDA, rng.normal(size=2), rng.normal(size=2))
        for oracle, formula in zip(expected_update(stepper, state, mrp), mean_drift(stepper, state, mrp)):
            np.testing.assert_allclose(oracle, formula, atol=1e-10)


class TestChecks:
    def test_weights_sum_to_one(self, random_chain_factory):
        mrp, _ = random_chain_factory(6, 2, seed=1)
        assert transition_weights(mrp).sum() == pytest.approx(1.0, abs=1e-12)

    def test_discount_mismatch(self, three_state_chain):
        mrp, features = three_state_chain
        stepper = _stepper(features, Algorithm.TD0, 0.5)
        with pytest.raises(ContractViolation, match="discount"):
            mean_drift(stepper, _state(Algorithm.TD0, [0.0], [0.0]), mrp)
