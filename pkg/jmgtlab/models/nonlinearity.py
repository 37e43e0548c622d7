"""Nonlinearity coefficient p(x, t) and Picard iteration diagnostics."""

from dataclasses import dataclass, field

import numpy as np

from jmgtlab.errors import HypothesisViolationError, ShapeError
from jmgtlab.models.grid import Grid


@dataclass
class NonlinearityField:
    """
    Real coefficient p with its time derivatives on the grid.

    ``support_window`` is the open time interval (t_lo, t_hi) outside of which
    p must vanish; ``None`` means no support claim.
    """

    p: np.ndarray
    p_t: np.ndarray
    p_tt: np.ndarray
    family: str = "samples"
    support_window: tuple[float, float] | None = None

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        self.p_t = np.asarray(self.p_t, dtype=float)
        self.p_tt = np.asarray(self.p_tt, dtype=float)
        if not (self.p.shape == self.p_t.shape == self.p_tt.shape):
            raise ShapeError("p and its time derivatives must share a shape")

    # ------------------------------------------------------------------ families

    @classmethod
    def zero(cls, grid: Grid) -> "NonlinearityField":
        zero = np.zeros(grid.field_shape)
        return cls(zero, zero.copy(), zero.copy(), family="zero")

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "NonlinearityField":
        zero = np.zeros(grid.field_shape)
        return cls(np.full(grid.field_shape, float(value)), zero, zero.copy(), family="constant")

    @classmethod
    def gaussian_bump(
        cls,
        grid: Grid,
        center: tuple[float, float],
        width: float,
        amplitude: float,
        time_window: tuple[float, float] | None = None,
    ) -> "NonlinearityField":
        """
        Spatial Gaussian times a sin^4 pulse on ``time_window`` (exact derivatives).

        The pulse and its first three derivatives vanish at both window ends, so p
        is C^3 in time and zero outside the window.
        """
        xx, yy = grid.mesh()
        spatial = amplitude * np.exp(
            -((xx - center[0]) ** 2 + (yy - center[1]) ** 2) / (2.0 * width**2)
        )
        t = grid.times
        if time_window is None:
            pulse, pulse_t, pulse_tt = np.ones_like(t), np.zeros_like(t), np.zeros_like(t)
        else:
            t_lo, t_hi = time_window
            k = np.pi / (t_hi - t_lo)
            active = (t > t_lo) & (t < t_hi)
            s = np.where(active, np.sin(k * (t - t_lo)), 0.0)
            co = np.where(active, np.cos(k * (t - t_lo)), 0.0)
            pulse = s**4
            pulse_t = 4.0 * k * s**3 * co
            pulse_tt = k**2 * (12.0 * s**2 * co**2 - 4.0 * s**4)

        return cls(
            p=pulse[:, None, None] * spatial,
            p_t=pulse_t[:, None, None] * spatial,
            p_tt=pulse_tt[:, None, None] * spatial,
            family="gaussian_bump",
            support_window=time_window,
        )

    @classmethod
    def from_samples(
        cls,
        values: np.ndarray,
        grid: Grid,
        support_window: tuple[float, float] | None = None,
    ) -> "NonlinearityField":
        """Sampled p; derivatives by second-order differences in t."""
        from jmgtlab.services.stencils import time_derivative

        values = np.asarray(values, dtype=float)
        grid.check_field(values, "p")
        p_t = time_derivative(values, grid.dt)
        p_tt = time_derivative(p_t, grid.dt)
        return cls(values, p_t, p_tt, family="samples", support_window=support_window)

    # -------------------------------------------------------------------- checks

    @property
    def is_zero(self) -> bool:
        return not (np.any(self.p) or np.any(self.p_t) or np.any(self.p_tt))

    def bound_surrogate(self, grid: Grid) -> float:
        """sup_t (||p|| + ||p_t|| + ||p_tt||) in L2 over the domain."""
        weights = grid.quadrature_weights()

        def l2(values):
            return np.sqrt(np.sum(np.abs(values) ** 2 * weights, axis=(-2, -1)))

        return float(np.max(l2(self.p) + l2(self.p_t) + l2(self.p_tt)))

    def check_bound(self, grid: Grid, big_m: float) -> float:
        value = self.bound_surrogate(grid)
        if value > big_m:
            raise HypothesisViolationError(
                f"nonlinearity bound surrogate {value:.3e} exceeds M = {big_m}"
            )
        return value

    def check_support(self, grid: Grid, window: tuple[float, float] | None = None) -> None:
        """Raise unless p vanishes on every time level outside ``window``."""
        window = window or self.support_window
        if window is None:
            return
        t = grid.times
        outside = (t <= window[0]) | (t >= window[1])
        if np.any(self.p[outside]):
            first = float(t[outside][np.any(self.p[outside] != 0.0, axis=(1, 2))][0])
            raise HypothesisViolationError(
                f"p is nonzero at t = {first:.4f}, outside the window {window}"
            )

    def support_times(self, grid: Grid) -> tuple[float, float] | None:
        """Smallest closed time interval containing every nonzero level."""
        levels = np.nonzero(np.any(self.p != 0.0, axis=(1, 2)))[0]
        if levels.size == 0:
            return None
        return float(grid.times[levels[0]]), float(grid.times[levels[-1]])


@dataclass
class PicardReport:
    """Diagnostics of the fixed-point iteration."""

    iterations: int = 0
    residual_history: list[float] = field(default_factory=list)
    contraction_estimate: float = 0.0
    converged: bool = False
    tolerance: float = 0.0
    data_norm: float = 0.0
    fixed_point_residual: float = 0.0
    pde_residual: float = 0.0

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "residual_history": [float(r) for r in self.residual_history],
            "contraction_estimate": float(self.contraction_estimate),
            "converged": self.converged,
            "tolerance": self.tolerance,
            "data_norm": float(self.data_norm),
            "fixed_point_residual": float(self.fixed_point_residual),
            "pde_residual": float(self.pde_residual),
        }
