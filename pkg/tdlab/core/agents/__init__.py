# tdlab linear agents: online evaluators and their exact diagnostics
from .schedules import ScheduleKind, StepSizeSchedule
from .state import Algorithm, EvaluatorState, MetricsRecord, Transition
from .steppers import (
    STEP_FUNCTIONS,
    Stepper,
    alternating_cd_step,
    coordinate_descent_batch,
    coordinate_descent_step,
    gtd2_step,
    residual_gradient_step,
    td0_step,
    td_lambda_step,
)
from .coordinate import CoordinateDescentResult, coordinate_descent_td0
from .drift import expected_update, mean_drift, transition_weights
from .trajectory import Probe, iter_trajectory, mspbe_trajectory
from .averaging import TailAverage, steps_to_threshold

__all__ = [
    "ScheduleKind", "StepSizeSchedule",
    "Algorithm", "EvaluatorState", "MetricsRecord", "Transition",
    "STEP_FUNCTIONS", "Stepper",
    "alternating_cd_step", "coordinate_descent_batch", "coordinate_descent_step",
    "gtd2_step", "residual_gradient_step", "td0_step", "td_lambda_step",
    "CoordinateDescentResult", "coordinate_descent_td0",
    "expected_update", "mean_drift", "transition_weights",
    "Probe", "iter_trajectory", "mspbe_trajectory",
    "TailAverage", "steps_to_threshold",
]
