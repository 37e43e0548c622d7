"""
Westervelt-type nonlinear MGT equation.

P u = (p u^2)_tt + f is solved by the contraction construction: u = v1 + v2
where v1 solves the linear problem with the full data and v2 is the fixed
point of w -> solve(source = (p (v1 + w)^2)_tt, zero data).
"""

import logging

import numpy as np
import pandas as pd

from jmgtlab.config import settings
from jmgtlab.errors import DivergenceError, ShapeError
from jmgtlab.models.coefficients import Coefficients
from jmgtlab.models.fields import DataTuple, FieldRole, Solution, SpaceTimeField
from jmgtlab.models.grid import Grid
from jmgtlab.models.nonlinearity import NonlinearityField, PicardReport
from jmgtlab.services.mgt_core import MGTSolver, data_norm, l2_q, scheme_residual
from jmgtlab.services.stencils import time_derivative

logger = logging.getLogger(__name__)

# Successive-residual ratios are only meaningful above the rounding floor
_RATIO_FLOOR = 1e3 * np.finfo(float).eps


def westervelt_source(p: NonlinearityField, u: Solution) -> SpaceTimeField:
    """F = (p u^2)_tt = p_tt u^2 + 4 p_t u u_t + 2 p (u_t^2 + u u_tt)."""
    if p.p.shape != u.u.shape:
        raise ShapeError(f"p has shape {p.p.shape}, u has shape {u.u.shape}")
    values = (
        p.p_tt * u.u**2
        + 4.0 * p.p_t * u.u * u.u_t
        + 2.0 * p.p * (u.u_t**2 + u.u * u.u_tt)
    )
    return SpaceTimeField(values, FieldRole.SOURCE, u.dt)


def westervelt_source_direct(p: NonlinearityField, u: np.ndarray, dt: float) -> np.ndarray:
    """(p u^2)_tt by double time differencing; cross-check of the expanded form."""
    return time_derivative(p.p * np.asarray(u) ** 2, dt, order=2)


def solve_nonlinear(
    data: DataTuple,
    p: NonlinearityField,
    coeff: Coefficients,
    grid: Grid,
    delta: float | None = None,
    solver: MGTSolver | None = None,
    max_iter: int | None = None,
    tol: float | None = None,
) -> tuple[Solution, PicardReport]:
    """
    Picard iteration for P u = (p u^2)_tt + f.

    Args:
        data: Full data of the problem (boundary, initial, source)
        p: Nonlinearity coefficient
        coeff: MGT coefficients
        grid: Space-time grid
        delta: Smallness level; a larger data norm only logs a warning
        solver: Factored solver to reuse
        max_iter: Iteration cap (default from settings)
        tol: Relative fixed-point tolerance (default from settings)

    Returns:
        (u, report)

    Raises:
        DivergenceError: no convergence within ``max_iter`` (carries the report)
    """
    max_iter = settings.picard_max_iter if max_iter is None else max_iter
    tol = settings.picard_tol if tol is None else tol
    solver = solver or MGTSolver(coeff, grid)

    size = data_norm(data, grid)
    if delta is not None and size > delta:
        logger.warning("data norm %.3e exceeds smallness level delta = %.3e", size, delta)

    report = PicardReport(tolerance=tol, data_norm=size)

    # 1. Linear part with the full data
    v1 = solver.solve(data)
    if p.is_zero:
        report.iterations = 1
        report.residual_history = [0.0]
        report.converged = True
        return v1, report

    # 2. Fixed point for the nonlinear correction
    zero = DataTuple.zeros(grid)
    correction = Solution.zeros(grid)
    ratios = []
    for iteration in range(1, max_iter + 1):
        u = v1 + correction
        zero.f = westervelt_source(p, u).values
        updated = solver.solve(zero)

        step = l2_q((updated - correction).u, grid)
        scale = max(l2_q((v1 + updated).u, grid), np.finfo(float).tiny)
        residual = step / scale
        previous = report.residual_history[-1] if report.residual_history else 0.0
        if previous > _RATIO_FLOOR and residual > _RATIO_FLOOR:
            ratios.append(residual / previous)
        report.residual_history.append(residual)
        correction = updated
        logger.debug("picard iteration %d: relative residual %.3e", iteration, residual)

        if not np.isfinite(residual):
            report.iterations = iteration
            raise DivergenceError("Picard iterate is not finite", step=iteration, report=report)
        if residual <= tol:
            report.converged = True
            break

    report.iterations = len(report.residual_history)
    report.contraction_estimate = max(ratios, default=0.0)
    report.fixed_point_residual = report.residual_history[-1]

    u = v1 + correction
    total_source = westervelt_source(p, u).values + data.source(grid)
    report.pde_residual = scheme_residual(u, total_source, coeff, grid)

    if not report.converged:
        raise DivergenceError(
            f"Picard iteration did not converge in {max_iter} iterations "
            f"(residual {report.fixed_point_residual:.3e})",
            step=report.iterations,
            report=report,
        )
    logger.info(
        "Picard converged in %d iterations (contraction %.3e)",
        report.iterations,
        report.contraction_estimate,
    )
    return u, report


def taylor_check(
    h1,
    p: NonlinearityField,
    coeff: Coefficients,
    grid: Grid,
    eps_list: list[float],
    solver: MGTSolver | None = None,
) -> pd.DataFrame:
    """
    Table of ||u(eps h1) - eps w1||_{L2(Q)} over ``eps_list``.

    ``h1`` is a boundary trace (zero initial data) or a full ``DataTuple``;
    w1 solves the linear problem with that unit data.

    Returns:
        DataFrame with columns eps, error, ratio (previous error / error)
    """
    unit = h1 if isinstance(h1, DataTuple) else DataTuple(
        h=h1,
        u0=np.zeros((grid.nx, grid.ny)),
        u1=np.zeros((grid.nx, grid.ny)),
        u2=np.zeros((grid.nx, grid.ny)),
    )
    solver = solver or MGTSolver(coeff, grid)
    w1 = solver.solve(unit)

    rows = []
    previous = None
    for eps in eps_list:
        if eps == 0.0:
            error = 0.0
        else:
            u, _ = solve_nonlinear(unit.scaled(eps), p, coeff, grid, solver=solver)
            error = l2_q(u.u - eps * w1.u, grid)
        ratio = previous / error if previous is not None and error > 0.0 else np.nan
        rows.append({"eps": eps, "error": error, "ratio": ratio})
        previous = error
    return pd.DataFrame(rows, columns=["eps", "error", "ratio"])
