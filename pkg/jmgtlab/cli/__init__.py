"""jmgtlab subcommands."""

from jmgtlab.cli import cgo_sweep, forward, linearize, reconstruct, validate

COMMANDS = [forward, cgo_sweep, linearize, reconstruct, validate]

__all__ = [
    "COMMANDS",
    "cgo_sweep",
    "forward",
    "linearize",
    "reconstruct",
    "validate",
]
