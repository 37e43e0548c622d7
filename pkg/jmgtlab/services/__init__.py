"""Numerical services of jmgtlab."""

from jmgtlab.services.mgt_core import DampedWaveSolver, MGTSolver
from jmgtlab.services.runner import TaskRunner
from jmgtlab.services.writers import OutputWriter

__all__ = [
    "MGTSolver",
    "DampedWaveSolver",
    "TaskRunner",
    "OutputWriter",
]
