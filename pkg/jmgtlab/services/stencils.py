"""Finite-difference stencils and quadrature on a Grid."""

from functools import lru_cache

import numpy as np
from scipy import sparse
from scipy.integrate import trapezoid

from jmgtlab.errors import GeometryError, InsufficientDataError
from jmgtlab.models.grid import Grid


def time_derivative(values: np.ndarray, dt: float, order: int = 1) -> np.ndarray:
    """
    Repeated second-order differences along axis 0.

    Central in the interior, one-sided second order at both ends (exact for
    quadratics in t).
    """
    if values.shape[0] < 3:
        raise InsufficientDataError(f"need at least 3 time levels, got {values.shape[0]}")
    result = values
    for _ in range(order):
        result = np.gradient(result, dt, axis=0, edge_order=2)
    return result


@lru_cache(maxsize=32)
def laplacian_matrix(grid: Grid) -> sparse.csr_matrix:
    """Five-point Laplacian with rows on interior nodes only (other rows empty)."""
    nx, ny = grid.nx, grid.ny
    ii, jj = np.nonzero(grid.interior)
    rows = np.ravel_multi_index((ii, jj), (nx, ny))
    cx, cy = 1.0 / grid.hx**2, 1.0 / grid.hy**2

    row_parts = [rows]
    col_parts = [rows]
    val_parts = [np.full(rows.size, -2.0 * (cx + cy))]
    for di, dj, coeff in ((1, 0, cx), (-1, 0, cx), (0, 1, cy), (0, -1, cy)):
        row_parts.append(rows)
        col_parts.append(np.ravel_multi_index((ii + di, jj + dj), (nx, ny)))
        val_parts.append(np.full(rows.size, coeff))

    n = grid.n_nodes
    return sparse.csr_matrix(
        (np.concatenate(val_parts), (np.concatenate(row_parts), np.concatenate(col_parts))),
        shape=(n, n),
    )


def apply_laplacian(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Five-point Laplacian of (..., nx, ny) values; zero off the interior."""
    lead = values.shape[:-2]
    flat = values.reshape(-1, grid.n_nodes)
    result = (laplacian_matrix(grid) @ flat.T).T
    return result.reshape(lead + (grid.nx, grid.ny))


def smooth_gradient(values: np.ndarray, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Second-order gradient over the whole box (one-sided at the box edges)."""
    gx = np.gradient(values, grid.hx, axis=-2, edge_order=2)
    gy = np.gradient(values, grid.hy, axis=-1, edge_order=2)
    return gx, gy


def smooth_hessian(values: np.ndarray, grid: Grid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    gx, gy = smooth_gradient(values, grid)
    gxx = np.gradient(gx, grid.hx, axis=-2, edge_order=2)
    gxy = np.gradient(gx, grid.hy, axis=-1, edge_order=2)
    gyy = np.gradient(gy, grid.hy, axis=-1, edge_order=2)
    return gxx, gxy, gyy


def smooth_laplacian(values: np.ndarray, grid: Grid) -> np.ndarray:
    gxx, _, gyy = smooth_hessian(values, grid)
    return gxx + gyy


@lru_cache(maxsize=32)
def normal_derivative_matrix(grid: Grid) -> sparse.csr_matrix:
    """
    Rows map nodal values to d/dnu at each boundary node.

    Each axis contributes nu_k * d/dx_k with a one-sided second-order difference
    stepping into the domain; near-tangent axes on curved boundaries fall back to
    central or first-order differences when the one-sided stencil leaves the domain.
    """
    nx, ny = grid.nx, grid.ny
    inside = grid.inside
    steps = (grid.hx, grid.hy)

    def is_inside(i, j):
        return 0 <= i < nx and 0 <= j < ny and inside[i, j]

    rows, cols, vals = [], [], []
    for row, (flat, normal) in enumerate(zip(grid.boundary_index, grid.boundary_normals)):
        if not np.isclose(np.linalg.norm(normal), 1.0, rtol=0.0, atol=1e-12):
            raise GeometryError(f"boundary node {flat} has no unit normal")
        i, j = np.unravel_index(flat, (nx, ny))
        for axis in (0, 1):
            component = normal[axis]
            if abs(component) < 1e-14:
                continue
            s = -1 if component > 0 else 1
            unit = (s, 0) if axis == 0 else (0, s)
            p1 = (i + unit[0], j + unit[1])
            p2 = (i + 2 * unit[0], j + 2 * unit[1])
            m1 = (i - unit[0], j - unit[1])
            h = steps[axis]
            if is_inside(*p1) and is_inside(*p2):
                stencil = [
                    ((i, j), -3.0 * s / (2 * h)),
                    (p1, 4.0 * s / (2 * h)),
                    (p2, -1.0 * s / (2 * h)),
                ]
            elif is_inside(*p1) and is_inside(*m1):
                stencil = [(p1, s / (2 * h)), (m1, -s / (2 * h))]
            elif is_inside(*p1):
                stencil = [((i, j), -s / h), (p1, s / h)]
            else:
                continue
            for (pi, pj), weight in stencil:
                rows.append(row)
                cols.append(np.ravel_multi_index((pi, pj), (nx, ny)))
                vals.append(component * weight)

    return sparse.csr_matrix((vals, (rows, cols)), shape=(grid.n_boundary, grid.n_nodes))


def normal_derivative(values: np.ndarray, grid: Grid) -> np.ndarray:
    """d/dnu of (..., nx, ny) values -> (..., n_boundary)."""
    lead = values.shape[:-2]
    flat = values.reshape(-1, grid.n_nodes)
    result = (normal_derivative_matrix(grid) @ flat.T).T
    return result.reshape(lead + (grid.n_boundary,))


def integrate_space(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Trapezoidal quadrature over the closed domain for (..., nx, ny) values."""
    return np.tensordot(values, grid.quadrature_weights(), axes=([-2, -1], [0, 1]))


def integrate_time(values: np.ndarray, dt: float) -> np.ndarray:
    return trapezoid(values, dx=dt, axis=0)


def integrate_boundary(trace: np.ndarray, grid: Grid) -> np.ndarray:
    """Arc-length quadrature of (..., n_boundary) values."""
    return trace @ grid.boundary_weights
