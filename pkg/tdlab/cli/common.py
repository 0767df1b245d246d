"""
Shared CLI plumbing: parser class, common flags, config loading, exit codes
"""

import argparse
import sys
from enum import IntEnum
from pathlib import Path
from typing import Dict, Iterable, Optional, Type, TypeVar

import structlog
from pydantic import BaseModel

from tdlab.schemas.flatfile import FlatEntry, apply_overrides, read_flat_file, validate_flat

logger = structlog.get_logger(__name__)

ModelT = TypeVar("ModelT", bound=BaseModel)


class ExitCode(IntEnum):
    OK = 0
    ERROR = 1
    DIVERGED = 2


class LabArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with ExitCode.ERROR instead of argparse's 2"""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(ExitCode.ERROR, f"{self.prog}: error: {message}\n")


def common_flags() -> argparse.ArgumentParser:
    """Parent parser for flags every command accepts"""
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override a config key (repeatable, last one wins)",
    )
    parent.add_argument("--seed", type=int, default=None, help="Override the seed")
    parent.add_argument("--quiet", action="store_true", help="Only log warnings and errors")
    return parent


def load_config(
    model: Type[ModelT],
    path: Optional[Path],
    overrides: Iterable[str] = (),
    extra: Optional[Dict[str, str]] = None,
) -> ModelT:
    """
    Read a flat config file (or start empty), apply --set overrides and any
    flag-derived keys, then validate against model.
    """
    entries = read_flat_file(path) if path is not None else {}
    entries = apply_overrides(entries, overrides)
    for key, value in (extra or {}).items():
        entries[key] = FlatEntry(key, value)
    return validate_flat(model, entries)


def base_dir(path: Optional[Path]) -> Optional[Path]:
    """Scenario files named in a config resolve relative to the config"""
    return Path(path).resolve().parent if path is not None else None


def report_error(error: BaseException) -> int:
    print(f"tdlab: error: {error}", file=sys.stderr)
    return ExitCode.ERROR


def echo(message: str) -> None:
    print(message, file=sys.stdout)
