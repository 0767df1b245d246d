"""
tdlab - Policy-Evaluation Laboratory
Command-line entry point

Commands:
- evaluate: one experiment, written as a run artifact
- sweep: exact msbe / mspbe over a theta grid
- compare: several experiments aligned by step
- control: cooperative Q-learning on a gridworld
- plot: SVG line charts from CSV columns
- validate: constructor checks without running

Exit codes: 0 success, 1 configuration/input/usage error, 2 diverged run.
"""

import logging
import os
import sys
from typing import List, Optional

import structlog

from tdlab.cli import ExitCode, build_parser
from tdlab.cli.common import report_error
from tdlab.config import get_settings
from tdlab.core.exceptions import LabError

logger = structlog.get_logger(__name__)


def configure_logging(quiet: bool = False) -> None:
    """Structured logs to stderr; stdout and output files stay clean"""
    settings = get_settings()
    level = logging.WARNING if quiet else getattr(logging, settings.log_level.upper(), logging.INFO)
    logging.basicConfig(stream=sys.stderr, level=level, format="%(message)s", force=True)

    if settings.log_format == "json":
        renderer = structlog.processors.JSONRenderer()
    else:
        colors = "NO_COLOR" not in os.environ and sys.stderr.isatty()
        renderer = structlog.dev.ConsoleRenderer(colors=colors)

    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            renderer,
        ],
        wrapper_class=structlog.stdlib.BoundLogger,
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=False,
    )


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(quiet=args.quiet)

    settings = get_settings()
    logger.debug("tdlab.command", command=args.command, version=settings.app_version)
    try:
        return int(args.handler(args))
    except LabError as e:
        logger.debug("tdlab.failed", command=args.command, code=e.code)
        return report_error(e)
    except OSError as e:
        return report_error(e)


if __name__ == "__main__":
    sys.exit(main())
