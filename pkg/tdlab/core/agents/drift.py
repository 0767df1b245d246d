"""
Expected one-step updates
expected_update averages one step over every transition (i, j) with weight
pi(i) P(i, j); mean_drift gives the same quantity from closed-form matrix
expressions. The two must agree for every stepper.
"""

from typing import Tuple

import numpy as np

from tdlab.core.chain.model import MarkovRewardProcess
from tdlab.core.chain.operators import td_system
from tdlab.core.exceptions import ContractViolation
from tdlab.core.agents.state import Algorithm, EvaluatorState, Transition
from tdlab.core.agents.steppers import STEP_FUNCTIONS, Stepper

Drift = Tuple[np.ndarray, np.ndarray]


def _check_model(stepper: Stepper, mrp: MarkovRewardProcess):
    if stepper.features.n_states != mrp.n_states:
        raise ContractViolation(
            f"features cover {stepper.features.n_states} states, chain has {mrp.n_states}"
        )
    if stepper.discount != mrp.discount:
        raise ContractViolation(
            f"stepper discount {stepper.discount} differs from chain discount {mrp.discount}"
        )


def transition_weights(mrp: MarkovRewardProcess) -> np.ndarray:
    """M = diag(pi) P"""
    return mrp.weighting[:, None] * mrp.transition


def expected_update(stepper: Stepper, state: EvaluatorState, mrp: MarkovRewardProcess) -> Drift:
    """Enumeration oracle; zero-weight transitions are skipped"""
    _check_model(stepper, mrp)
    step = STEP_FUNCTIONS[stepper.algorithm]
    weights = transition_weights(mrp)
    d_primary = np.zeros_like(state.primary)
    d_aux = np.zeros_like(state.aux)
    for i, j in zip(*np.nonzero(weights)):
        t = Transition(int(i), int(j), float(mrp.reward[i, j]), state.step)
        successor = step(stepper, state, t)
        d_primary += weights[i, j] * (successor.primary - state.primary)
        d_aux += weights[i, j] * (successor.aux - state.aux)
    return d_primary, d_aux


def mean_drift(stepper: Stepper, state: EvaluatorState, mrp: MarkovRewardProcess) -> Drift:
    """
    Closed-form expected update. With M = diag(pi) P, v = Phi theta and the
    TD-error matrix E(i, j) = g(i, j) + alpha v(j) - v(i):

        td0                 gamma (b - A theta)
        td_lambda           gamma (alpha lambda z pi^T dbar + Phi^T D dbar),
                            alpha lambda z + Phi^T pi - z
        residual_gradient   gamma Phi^T (rowsum(M o E) - alpha colsum(M o E))
        gtd2                w-step beta Phi^T D (dbar - Phi w), theta-step through
                            the post-update readout U = Phi w + beta s (E - Phi w)
        alternating_cd      r-step beta Phi^T D dbar_cd,
                            x-step gamma (Phi^T D Phi (r - x) + beta Phi^T (pi s dbar_cd))
        coordinate_descent  exact inner solutions, Phi^T diag(pi / s) (.)

    s(i) = ||phi(i)||^2 and dbar = rowsum(P o E).
    """
    _check_model(stepper, mrp)
    phi = stepper.features.matrix
    alpha = stepper.discount
    pi = mrp.weighting
    weights = transition_weights(mrp)
    sq_norms = np.einsum("ik,ik->i", phi, phi)
    primary, aux = state.primary, state.aux
    algorithm = stepper.algorithm

    def errors(bootstrap: np.ndarray, current: np.ndarray) -> np.ndarray:
        return mrp.reward + alpha * bootstrap[None, :] - current[:, None]

    if algorithm is Algorithm.TD0:
        a, b = td_system(mrp, stepper.features)
        return stepper.schedule.rate(state.step) * (b - a @ primary), np.zeros_like(aux)

    if algorithm is Algorithm.TD_LAMBDA:
        v = phi @ primary
        dbar = (mrp.transition * errors(v, v)).sum(axis=1)
        gamma = stepper.schedule.rate(state.step)
        decay = alpha * stepper.trace_decay
        d_theta = gamma * (decay * (pi @ dbar) * aux + phi.T @ (pi * dbar))
        d_trace = decay * aux + phi.T @ pi - aux
        return d_theta, d_trace

    if algorithm is Algorithm.RESIDUAL_GRADIENT:
        v = phi @ primary
        weighted = weights * errors(v, v)
        gamma = stepper.schedule.rate(state.step)
        d_theta = gamma * (phi.T @ weighted.sum(axis=1) - alpha * (phi.T @ weighted.sum(axis=0)))
        return d_theta, np.zeros_like(aux)

    if algorithm is Algorithm.GTD2:
        v = phi @ primary
        readout = phi @ aux
        e = errors(v, v)
        dbar = (mrp.transition * e).sum(axis=1)
        beta = stepper.aux_rates.rate(state.step)
        gamma = stepper.schedule.rate(state.step)
        d_w = beta * (phi.T @ (pi * (dbar - readout)))
        post = readout[:, None] + beta * sq_norms[:, None] * (e - readout[:, None])
        weighted = weights * post
        d_theta = gamma * (phi.T @ weighted.sum(axis=1) - alpha * (phi.T @ weighted.sum(axis=0)))
        return d_theta, d_w

    if algorithm is Algorithm.ALTERNATING_CD:
        r_values = phi @ primary
        x_values = phi @ aux
        dbar = (mrp.transition * errors(x_values, r_values)).sum(axis=1)
        beta = stepper.schedule.rate(state.step)
        gamma = stepper.aux_rates.rate(state.step)
        d_r = beta * (phi.T @ (pi * dbar))
        d_x = gamma * (phi.T @ (pi * (r_values - x_values)) + beta * (phi.T @ (pi * sq_norms * dbar)))
        return d_r, d_x

    if algorithm is Algorithm.COORDINATE_DESCENT:
        r_values = phi @ primary
        x_values = phi @ aux
        target = (mrp.transition * (mrp.reward + alpha * x_values[None, :])).sum(axis=1)
        scale = np.divide(pi, sq_norms, out=np.zeros_like(pi), where=sq_norms > 0)
        d_r = phi.T @ (scale * (target - r_values))
        d_x = phi.T @ (scale * (target - x_values))
        return d_r, d_x

    raise ContractViolation(f"no drift formula for {algorithm.value}")
