# tdlab command line: one module per command group
from tdlab.cli import control, evaluate, experiments, plot, validate
from tdlab.cli.common import ExitCode, LabArgumentParser, common_flags


def build_parser() -> LabArgumentParser:
    parser = LabArgumentParser(
        prog="tdlab",
        description="Policy-evaluation laboratory: exact Bellman-error oracles, "
        "linear TD-family steppers and cooperative coordinate descent.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    parent = common_flags()
    for module in (evaluate, experiments, control, plot, validate):
        module.register(subparsers, parent)
    return parser


__all__ = ["ExitCode", "LabArgumentParser", "build_parser"]
