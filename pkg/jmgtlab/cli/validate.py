"""``jmgtlab validate``: run every pre-compute check of a config without solving."""

import logging

from jmgtlab.cli.context import apply_overrides
from jmgtlab.config import settings
from jmgtlab.errors import JmgtLabError
from jmgtlab.services.experiment import config_hash, load_config, validate_experiment
from jmgtlab.services.writers import OutputWriter

logger = logging.getLogger(__name__)

COMMAND = "validate"
COMMANDS = ("forward", "cgo-sweep", "linearize", "reconstruct")


def register(subparsers, parent) -> None:
    parser = subparsers.add_parser(
        COMMAND, parents=[parent], help="check a config against every command"
    )
    parser.add_argument(
        "--command",
        dest="commands",
        action="append",
        choices=COMMANDS,
        help="only check these commands (repeatable)",
    )
    parser.set_defaults(handler=run)


def run(args) -> int:
    config = apply_overrides(load_config(args.config), args)
    results = {}
    exit_code = 0
    for command in args.commands or COMMANDS:
        try:
            checks = validate_experiment(config, command)
        except JmgtLabError as exc:
            logger.error("%s: %s", command, exc)
            results[command] = {"ok": False, "error": type(exc).__name__, "message": str(exc)}
            exit_code = exit_code or exc.exit_code
        else:
            results[command] = {"ok": True, "checks": checks}

    out_dir = args.out or config.run.output_dir or settings.output_dir / COMMAND
    writer = OutputWriter(out_dir)
    writer.write_json("validation", {"config_hash": config_hash(config), "commands": results})
    return exit_code
