"""
tdlab control
Cooperative Q-factor learning on a gridworld
"""

import argparse
from pathlib import Path

import structlog

from tdlab.cli.common import ExitCode, base_dir, echo, load_config
from tdlab.schemas.control import ControlConfig
from tdlab.services.artifact_service import get_artifact_service
from tdlab.services.control_service import get_control_service

logger = structlog.get_logger(__name__)


def register(subparsers, parent: argparse.ArgumentParser) -> None:
    parser = subparsers.add_parser(
        "control",
        parents=[parent],
        help="Run cooperative Q-learning on a gridworld",
        description="Write the episode log CSV to --out and the greedy policy grid to "
        "--policy-out (default: --out with a .policy.txt suffix).",
    )
    parser.add_argument("--config", type=Path, default=None, help="Control config file")
    parser.add_argument("--out", type=Path, required=True, help="Episode log CSV path")
    parser.add_argument("--policy-out", type=Path, default=None, help="Policy grid text path")
    parser.set_defaults(handler=control)


def control(args: argparse.Namespace) -> int:
    extra = {} if args.seed is None else {"seed": str(args.seed)}
    config = load_config(ControlConfig, args.config, args.overrides, extra)
    result = get_control_service().run(config, base_dir=base_dir(args.config))

    policy_out = args.policy_out or args.out.with_suffix(".policy.txt")
    artifacts = get_artifact_service()
    artifacts.write_table(args.out, result.episodes)
    artifacts.write_text(policy_out, result.policy_text)

    echo(f"episodes: {len(result.episodes)}")
    echo(result.policy_text.rstrip("\n"))
    echo(f"episode log: {args.out}")
    echo(f"policy: {policy_out}")
    return ExitCode.OK
