"""
tdlab evaluate
Run one policy-evaluation experiment and write its artifact
"""

import argparse
from pathlib import Path

import structlog

from tdlab.cli.common import ExitCode, base_dir, echo, load_config
from tdlab.schemas.experiment import ExperimentConfig
from tdlab.services.artifact_service import get_artifact_service
from tdlab.services.experiment_service import get_experiment_service

logger = structlog.get_logger(__name__)


def register(subparsers, parent: argparse.ArgumentParser) -> None:
    parser = subparsers.add_parser(
        "evaluate",
        parents=[parent],
        help="Run one experiment",
        description="Run an ExperimentConfig and write the run artifact. "
        "Exit 0 when completed, 2 when the run diverged, 1 on configuration errors.",
    )
    parser.add_argument("--config", type=Path, required=True, help="Experiment config file")
    parser.add_argument("--out", type=Path, required=True, help="Artifact output path")
    parser.set_defaults(handler=evaluate)


def evaluate(args: argparse.Namespace) -> int:
    extra = {} if args.seed is None else {"seed": str(args.seed)}
    config = load_config(ExperimentConfig, args.config, args.overrides, extra)

    artifact = get_experiment_service().run(config, base_dir=base_dir(args.config))
    get_artifact_service().write_artifact(args.out, artifact)

    echo(f"status: {artifact.status}")
    echo(f"terminal_mspbe: {artifact.summary.terminal_mspbe:.6g}")
    if artifact.summary.tail_mspbe is not None:
        echo(f"tail_mspbe: {artifact.summary.tail_mspbe:.6g}")
    echo(f"artifact: {args.out}")
    return ExitCode.DIVERGED if artifact.diverged else ExitCode.OK
