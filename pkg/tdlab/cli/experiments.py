"""
tdlab sweep / compare
Error-surface sweeps and side-by-side algorithm runs
"""

import argparse
from pathlib import Path
from typing import Optional

import structlog
from pydantic import ValidationError

from tdlab.cli.common import ExitCode, base_dir, echo, load_config
from tdlab.core.exceptions import ConfigError
from tdlab.schemas.experiment import CompareConfig, ExperimentConfig, SweepConfig
from tdlab.services.artifact_service import get_artifact_service
from tdlab.services.experiment_service import get_experiment_service

logger = structlog.get_logger(__name__)


def register(subparsers, parent: argparse.ArgumentParser) -> None:
    sweep_parser = subparsers.add_parser(
        "sweep",
        parents=[parent],
        help="Tabulate exact msbe and mspbe over a theta grid",
        description="Write a (theta, msbe, mspbe) CSV for a scalar-parameter scenario.",
    )
    sweep_parser.add_argument("--config", type=Path, default=None, help="Sweep config file")
    sweep_parser.add_argument("--out", type=Path, required=True, help="CSV output path")
    sweep_parser.set_defaults(handler=sweep)

    compare_parser = subparsers.add_parser(
        "compare",
        parents=[parent],
        help="Run several experiments and align their error curves",
        description="Run two or more experiment configs on the same scenario and write one "
        "CSV keyed by step. --seed derives independent per-run seeds from one parent.",
    )
    compare_parser.add_argument(
        "--config", type=Path, action="append", required=True, help="Experiment config (repeat)"
    )
    compare_parser.add_argument("--out", type=Path, required=True, help="Aligned CSV output path")
    compare_parser.add_argument(
        "--artifacts", type=Path, default=None, help="Directory for the per-run artifacts"
    )
    compare_parser.add_argument("--workers", type=int, default=None, help="Parallel runs")
    compare_parser.set_defaults(handler=compare)


def sweep(args: argparse.Namespace) -> int:
    if args.seed is not None:
        logger.warning("sweep.seed_ignored", seed=args.seed)
    config = load_config(SweepConfig, args.config, args.overrides)
    table = get_experiment_service().sweep(config, base_dir=base_dir(args.config))
    get_artifact_service().write_table(args.out, table)
    echo(f"rows: {len(table)}")
    echo(f"table: {args.out}")
    return ExitCode.OK


def compare(args: argparse.Namespace) -> int:
    runs = [load_config(ExperimentConfig, path, args.overrides) for path in args.config]
    config = _compare_config(runs, args.seed, args.workers)
    result = get_experiment_service().compare(config, base_dir=base_dir(args.config[0]))

    artifacts = get_artifact_service()
    artifacts.write_table(args.out, result.table)
    if args.artifacts is not None:
        for label, artifact in zip(result.labels, result.artifacts):
            artifacts.write_artifact(args.artifacts / f"{label}.artifact", artifact)

    for label, artifact in zip(result.labels, result.artifacts):
        echo(f"{label}: {artifact.status} (terminal_mspbe {artifact.summary.terminal_mspbe:.6g})")
    echo(f"table: {args.out}")
    return ExitCode.DIVERGED if any(a.diverged for a in result.artifacts) else ExitCode.OK


def _compare_config(runs, seed: Optional[int], workers: Optional[int]) -> CompareConfig:
    payload = {"runs": runs}
    if seed is not None:
        payload["seed"] = seed
    if workers is not None:
        payload["workers"] = workers
    try:
        return CompareConfig.model_validate(payload)
    except ValidationError as e:
        first = e.errors()[0]
        key_path = ".".join(str(part) for part in first["loc"]) or "runs"
        raise ConfigError(first["msg"], key_path=key_path)
