"""Discrete weighted light-ray transform and its reconstructions."""

from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import sparse

from jmgtlab.models.grid import DomainShape, Grid
from jmgtlab.models.measurement import MeasurementMode
from jmgtlab.models.probe import AngularProfile, Cutoff, ProbeGeometry


@dataclass(frozen=True)
class BasisAxes:
    """Nodes of the trilinear (x, y, t) basis of the unknown field."""

    x: np.ndarray
    y: np.ndarray
    t: np.ndarray

    @classmethod
    def covering(cls, grid: Grid, shape: tuple[int, int, int]) -> "BasisAxes":
        nx, ny, nt = shape
        return cls(
            x=np.linspace(grid.x[0], grid.x[-1], nx),
            y=np.linspace(grid.y[0], grid.y[-1], ny),
            t=np.linspace(0.0, grid.t_final, nt),
        )

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.x.size, self.y.size, self.t.size)

    @property
    def size(self) -> int:
        return self.x.size * self.y.size * self.t.size

    def interpolation_matrix(self, x, y, t) -> sparse.csr_matrix:
        """
        Trilinear evaluation at points (x, y, t) -> sparse (n_points, size).

        Points outside the basis box get empty rows.
        """
        x, y, t = (np.asarray(v, dtype=float).ravel() for v in (x, y, t))
        n = x.size
        idx, frac, valid = [], [], np.ones(n, dtype=bool)
        for axis, values in zip((self.x, self.y, self.t), (x, y, t)):
            spacing = axis[1] - axis[0]
            pos = (values - axis[0]) / spacing
            valid &= (pos >= -1e-12) & (pos <= axis.size - 1 + 1e-12)
            cell = np.clip(np.floor(pos).astype(int), 0, axis.size - 2)
            idx.append(cell)
            frac.append(np.clip(pos - cell, 0.0, 1.0))

        rows, cols, vals = [], [], []
        points = np.arange(n)
        for di in (0, 1):
            for dj in (0, 1):
                for dk in (0, 1):
                    weight = (
                        (frac[0] if di else 1.0 - frac[0])
                        * (frac[1] if dj else 1.0 - frac[1])
                        * (frac[2] if dk else 1.0 - frac[2])
                    )
                    flat = np.ravel_multi_index(
                        (idx[0] + di, idx[1] + dj, idx[2] + dk), self.shape
                    )
                    rows.append(points[valid])
                    cols.append(flat[valid])
                    vals.append(weight[valid])
        return sparse.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n, self.size),
        )


@dataclass
class SourceSamples:
    """Midpoint quadrature of one source's cone in (theta, r, t)."""

    geometry: ProbeGeometry
    theta: np.ndarray
    r: np.ndarray
    t: np.ndarray
    weight: float
    profiles: list[AngularProfile]
    cutoff: Cutoff
    inside: np.ndarray  # (n_theta, n_r) sample point lies in the closed domain

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.theta.size, self.r.size, self.t.size)

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        """Cartesian (x, y) of the (theta, r) samples."""
        geom = self.geometry
        rho = geom.sqrt_b * self.r[None, :]
        return (
            geom.q[0] + rho * np.cos(self.theta)[:, None],
            geom.q[1] + rho * np.sin(self.theta)[:, None],
        )


@dataclass
class RayTransformSystem:
    """
    Rows (source, profile, mu) of the map

        X -> sum over samples of w Phi(theta) exp(-mu (r + t)) [chi^2] r^(-1/2) X,

    X being the unknown e^(-gamma t / 2) p on the trilinear basis. ``matrix``
    is that map; ``rows`` labels its rows.
    """

    sources: list[SourceSamples]
    mus: np.ndarray
    mode: MeasurementMode
    basis: BasisAxes
    matrix: np.ndarray
    rows: pd.DataFrame
    support_start: list[float] = field(default_factory=list)

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_unknowns(self) -> int:
        return self.matrix.shape[1]

    def column_norms(self) -> np.ndarray:
        return np.linalg.norm(self.matrix, axis=0)

    def covered(self, threshold: float = 1e-6) -> np.ndarray:
        """Basis nodes whose column carries weight above ``threshold`` times the largest."""
        norms = self.column_norms()
        top = norms.max() if norms.size else 0.0
        if top == 0.0:
            return np.zeros(norms.shape, dtype=bool)
        return norms > threshold * top


@dataclass
class ReconstructedField:
    """Basis coefficients of a reconstructed field with coverage and fit diagnostics."""

    coefficients: np.ndarray
    basis: BasisAxes
    covered: np.ndarray
    residual: float
    lam: float
    method: str = "tikhonov"

    @property
    def coverage_fraction(self) -> float:
        return float(np.mean(self.covered)) if self.covered.size else 0.0

    def evaluate(self, x, y, t) -> np.ndarray:
        x, y, t = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, t)))
        matrix = self.basis.interpolation_matrix(x, y, t)
        return (matrix @ self.coefficients).reshape(x.shape)

    def coverage_at(self, x, y, t) -> np.ndarray:
        """Interpolated coverage indicator (1 where every touching node is covered)."""
        x, y, t = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, t)))
        matrix = self.basis.interpolation_matrix(x, y, t)
        return (matrix @ self.covered.astype(float)).reshape(x.shape)

    def evaluate_on(self, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
        """Field and coverage indicator on the (nt + 1, nx, ny) simulation grid."""
        t, xx, yy = np.meshgrid(grid.times, grid.x, grid.y, indexing="ij")
        return self.evaluate(xx, yy, t), self.coverage_at(xx, yy, t)


def inside_domain(x: np.ndarray, y: np.ndarray, grid: Grid) -> np.ndarray:
    """Points of the closed domain (p is extended by zero outside it)."""
    if grid.shape == DomainShape.DISC:
        return np.hypot(x - grid.center[0], y - grid.center[1]) <= grid.radius
    return (x >= grid.x[0]) & (x <= grid.x[-1]) & (y >= grid.y[0]) & (y <= grid.y[-1])
