"""
tdlab plot
SVG line charts from CSV tables or run artifacts
"""

import argparse
from pathlib import Path
from typing import Dict

from tdlab.cli.common import ExitCode, echo, load_config
from tdlab.schemas.plot import PlotSpec
from tdlab.services.plot_service import get_plot_service


def register(subparsers, parent: argparse.ArgumentParser) -> None:
    parser = subparsers.add_parser(
        "plot",
        parents=[parent],
        help="Render CSV columns as an SVG line chart",
        description="One polyline per --y column against --x. Flags override keys of "
        "an optional plot spec file (input, x, y, log_x, log_y, title, output).",
    )
    parser.add_argument("--config", type=Path, default=None, help="Plot spec file")
    parser.add_argument("--input", type=Path, default=None, help="CSV or artifact to read")
    parser.add_argument("--x", default=None, help="x column (default: step)")
    parser.add_argument("--y", action="append", default=None, help="y column (repeat or comma-separate)")
    parser.add_argument("--logx", action="store_true", help="Log-scale x axis")
    parser.add_argument("--logy", action="store_true", help="Log-scale y axis")
    parser.add_argument("--title", default=None)
    parser.add_argument("--out", type=Path, default=None, help="SVG output path")
    parser.set_defaults(handler=plot)


def plot(args: argparse.Namespace) -> int:
    spec = load_config(PlotSpec, args.config, args.overrides, _flag_keys(args))
    get_plot_service().write(spec)
    echo(f"plot: {spec.output}")
    return ExitCode.OK


def _flag_keys(args: argparse.Namespace) -> Dict[str, str]:
    keys: Dict[str, str] = {}
    if args.input is not None:
        keys["input"] = str(args.input)
    if args.x is not None:
        keys["x"] = args.x
    if args.y:
        keys["y"] = ", ".join(args.y)
    if args.logx:
        keys["log_x"] = "true"
    if args.logy:
        keys["log_y"] = "true"
    if args.title is not None:
        keys["title"] = args.title
    if args.out is not None:
        keys["output"] = str(args.out)
    return keys
