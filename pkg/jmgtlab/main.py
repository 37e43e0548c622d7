"""jmgtlab command-line entry point."""

import argparse
import logging
import sys
from pathlib import Path

from jmgtlab import __version__
from jmgtlab.cli import COMMANDS
from jmgtlab.config import settings
from jmgtlab.errors import JmgtLabError
from jmgtlab.models.measurement import MeasurementMode

logger = logging.getLogger("jmgtlab")

LOG_FORMAT = "[%(asctime)s] [%(levelname)s] %(name)s: %(message)s"


def build_parser() -> argparse.ArgumentParser:
    # Flags shared by every subcommand
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", type=Path, required=True, help="experiment TOML file")
    parent.add_argument("--out", type=Path, help="output directory")
    parent.add_argument("--threads", type=int, help="parallelism cap")
    parent.add_argument("--seed", type=int, help="random seed")
    parent.add_argument(
        "--mode", choices=[mode.value for mode in MeasurementMode], help="measurement mode"
    )
    parent.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(
        prog="jmgtlab",
        description="Forward solver and coefficient recovery lab for the Jordan-MGT equation",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for module in COMMANDS:
        module.register(subparsers, parent)
    return parser


def configure_logging(verbose: bool = False) -> None:
    level = logging.DEBUG if verbose else getattr(logging, settings.log_level.upper(), logging.INFO)
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        return args.handler(args)
    except JmgtLabError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
