"""Second-order linearization designs and results."""

import logging
from dataclasses import dataclass

import numpy as np

from jmgtlab.errors import ArgumentError
from jmgtlab.models.fields import DataTuple, Solution
from jmgtlab.models.grid import Grid

logger = logging.getLogger(__name__)


@dataclass
class EpsilonDesign:
    """
    Data eps1 * data1 + eps2 * data2 of the nonlinear solves behind a mixed
    second derivative in (eps1, eps2).

    Initial data are zero for boundary-only measurements and may be general
    when final-time data are measured as well.
    """

    DEFAULT_EPS = 1e-3

    data1: DataTuple
    data2: DataTuple
    eps1: float = DEFAULT_EPS
    eps2: float = DEFAULT_EPS
    delta: float | None = None

    def __post_init__(self):
        if self.eps1 == 0.0 or self.eps2 == 0.0:
            raise ArgumentError("cross differences need nonzero eps1 and eps2")

    def combined(self, weight1: float, weight2: float) -> DataTuple:
        """weight1 * data1 + weight2 * data2."""
        return self.data1.combine(self.data2, weight1, weight2)

    def swapped(self) -> "EpsilonDesign":
        return EpsilonDesign(self.data2, self.data1, self.eps2, self.eps1, self.delta)

    def check_smallness(self, grid: Grid) -> float:
        """Data norm of the combined data; logs a warning above ``delta``."""
        from jmgtlab.services.mgt_core import data_norm

        size = data_norm(self.combined(self.eps1, self.eps2), grid)
        if self.delta is not None and size > self.delta:
            logger.warning(
                "combined data norm %.3e exceeds smallness level delta = %.3e", size, self.delta
            )
        return size


@dataclass
class WReduction:
    """W = w_t + beta w with the residual of W_tt - b Lap W + gamma W_t = F + gamma beta w_t."""

    W: np.ndarray
    W_t: np.ndarray
    residual: np.ndarray
    residual_norm: float

    def to_dict(self) -> dict:
        return {"residual_norm": self.residual_norm, "sup_W": float(np.max(np.abs(self.W)))}


@dataclass
class LinearizedPair:
    """First-order solutions w1, w2, the second-order linearization w and its reduction."""

    w1: Solution
    w2: Solution
    w: Solution
    reduction: WReduction | None = None
