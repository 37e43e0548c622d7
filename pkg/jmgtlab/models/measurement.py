"""Measurement records and adjoint probes."""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from jmgtlab.errors import DataError
from jmgtlab.models.fields import Solution
from jmgtlab.models.grid import Grid


class MeasurementMode(str, Enum):
    """Which measurement map is simulated."""

    LAMBDA_T = "lambda_T"  # Neumann trace plus final-time triple
    B_T = "B_T"  # Neumann trace only, cut-off probes


@dataclass
class MeasurementRecord:
    """
    Neumann trace of w on the lateral boundary and its triple at t = T.

    ``final_triple`` is (w, w_t, w_tt) at the last time level.
    """

    dtn_trace: np.ndarray | None
    final_triple: tuple[np.ndarray, np.ndarray, np.ndarray] | None
    mode: MeasurementMode
    sigma: float
    probe_ids: dict = field(default_factory=dict)

    def validate(self, grid: Grid) -> None:
        if self.dtn_trace is None:
            raise DataError("measurement record has no Neumann trace")
        grid.check_trace(self.dtn_trace, "dtn_trace")
        if self.final_triple is None:
            raise DataError("measurement record has no final-time triple")
        for name, values in zip(("w", "w_t", "w_tt"), self.final_triple):
            if values.shape != (grid.nx, grid.ny):
                raise DataError(f"final {name} has shape {values.shape}")


@dataclass
class AdjointProbe:
    """
    y = exp(-i sigma (phi + t)) a0 + r0 solving y_tt - b Lap y - gamma y_t = 0.

    a0 = exp(gamma t / 2) d^(-1/4); r0 has zero initial and boundary data.
    """

    sigma: float
    a0: np.ndarray
    y: Solution
    r0: Solution
    r0_norms: dict = field(default_factory=dict)
    residual: float = 0.0
