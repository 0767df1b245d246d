"""
tdlab validate
Run every constructor check on a config or scenario without executing it
"""

import argparse
from pathlib import Path

import structlog

from tdlab.cli.common import ExitCode, base_dir, echo
from tdlab.schemas.control import ControlConfig
from tdlab.schemas.experiment import ExperimentConfig, SweepConfig
from tdlab.schemas.flatfile import FlatConfig, apply_overrides, read_flat_file, validate_flat
from tdlab.schemas.plot import PlotSpec
from tdlab.services.control_service import get_control_service
from tdlab.services.experiment_service import get_experiment_service
from tdlab.services.scenario_service import get_scenario_service

logger = structlog.get_logger(__name__)

CONTROL_KEYS = {"approximator", "target_update", "max_episode_steps", "max_episodes", "initial_value"}


def register(subparsers, parent: argparse.ArgumentParser) -> None:
    parser = subparsers.add_parser(
        "validate",
        parents=[parent],
        help="Check a config, scenario file or built-in scenario name",
        description="Validates without running: schema constraints, transition row sums, "
        "weighting, Gram conditioning and step-size positivity. Exit 0 when valid, 1 otherwise.",
    )
    parser.add_argument(
        "--config", required=True, help="Config file, scenario file or built-in scenario name"
    )
    parser.set_defaults(handler=validate)


def validate(args: argparse.Namespace) -> int:
    scenarios = get_scenario_service()
    if scenarios.is_builtin(args.config) and not Path(args.config).exists():
        scenario = scenarios.builtin_scenario(args.config)
        echo(f"ok: built-in scenario {scenario.name}")
        return ExitCode.OK

    path = Path(args.config)
    entries = apply_overrides(read_flat_file(path), args.overrides)
    kind = config_kind(entries)
    directory = base_dir(path)

    if kind == "scenario":
        scenario = scenarios.parse_scenario(entries, default_name=path.stem)
        echo(f"ok: scenario {scenario.name} ({scenario.mrp.n_states} states, k = {scenario.n_features})")
    elif kind == "experiment":
        config = validate_flat(ExperimentConfig, entries)
        experiments = get_experiment_service()
        experiments.stepper_for(config, experiments.scenario_for(config, directory))
        echo(f"ok: experiment {config.display_label} on {config.scenario}")
    elif kind == "control":
        config = validate_flat(ControlConfig, entries)
        grid = get_control_service().grid_for(config, directory)
        echo(f"ok: control on {config.scenario} ({grid.n_states} cells)")
    elif kind == "plot":
        spec = validate_flat(PlotSpec, entries)
        echo(f"ok: plot of {', '.join(spec.y)} against {spec.x}")
    else:
        config = validate_flat(SweepConfig, entries)
        get_experiment_service().scenario_for(config, directory)
        echo(f"ok: sweep over {len(config.grid())} points on {config.scenario}")
    logger.debug("validate.passed", path=str(path), kind=kind)
    return ExitCode.OK


def config_kind(entries: FlatConfig) -> str:
    """Guess the schema of a flat file from its keys"""
    heads = {key.split(".", 1)[0] for key in entries}
    if "states" in heads:
        return "scenario"
    if "algorithm" in heads:
        return "experiment"
    if heads & CONTROL_KEYS or "rates" in heads or "epsilon" in heads:
        return "control"
    if "input" in heads or "output" in heads:
        return "plot"
    return "sweep"
