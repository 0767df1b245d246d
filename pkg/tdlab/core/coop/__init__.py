# tdlab cooperative approximation: two-parameter-set updates and toy control
from .approximators import (
    DifferentiableApproximator,
    LinearApproximator,
    QFactorModel,
    QuadraticApproximator,
    TabularQApproximator,
    self_test,
    tabular_q_model,
)
from .updates import SgdStep, TargetUpdate, coop_eval_step, coop_q_step, epsilon_greedy_action
from .gridworld import GridWorld, Move
from .control import (
    ControlLog,
    ControlSetup,
    EpisodeRecord,
    ExplorationPolicy,
    greedy_policy,
    greedy_rollout,
    run_control,
)

__all__ = [
    "DifferentiableApproximator", "LinearApproximator", "QFactorModel",
    "QuadraticApproximator", "TabularQApproximator", "self_test", "tabular_q_model",
    "SgdStep", "TargetUpdate", "coop_eval_step", "coop_q_step", "epsilon_greedy_action",
    "GridWorld", "Move",
    "ControlLog", "ControlSetup", "EpisodeRecord", "ExplorationPolicy",
    "greedy_policy", "greedy_rollout", "run_control",
]
