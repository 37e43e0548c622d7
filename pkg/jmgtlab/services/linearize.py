"""
Second-order linearization of the nonlinear problem in the data.

w = d^2 u / d eps1 d eps2 at eps = 0 solves P w = F(p, w1, w2) with zero data,
where F(p, w1, w2) = (2 p w1 w2)_tt. It is computed either from three nonlinear
solves (mixed cross difference) or from one linear solve with that source.
"""

import logging

import numpy as np

from jmgtlab.errors import ArgumentError, ShapeError
from jmgtlab.models.coefficients import Coefficients
from jmgtlab.models.fields import DataTuple, FieldRole, Solution, SpaceTimeField
from jmgtlab.models.grid import Grid
from jmgtlab.models.linearization import EpsilonDesign, LinearizedPair, WReduction
from jmgtlab.models.nonlinearity import NonlinearityField
from jmgtlab.services.jmgt_nonlinear import solve_nonlinear
from jmgtlab.services.mgt_core import MGTSolver, l2_q
from jmgtlab.services.stencils import apply_laplacian, time_derivative

logger = logging.getLogger(__name__)


def linearized_source(p: NonlinearityField, w1: Solution, w2: Solution) -> SpaceTimeField:
    """
    F = 2p (w1_tt w2 + 2 w1_t w2_t + w1 w2_tt) + 4 p_t (w1_t w2 + w1 w2_t) + 2 p_tt w1 w2.
    """
    if not (p.p.shape == w1.u.shape == w2.u.shape):
        raise ShapeError(
            f"p {p.p.shape}, w1 {w1.u.shape} and w2 {w2.u.shape} must share one grid"
        )
    values = (
        2.0 * p.p * (w1.u_tt * w2.u + 2.0 * w1.u_t * w2.u_t + w1.u * w2.u_tt)
        + 4.0 * p.p_t * (w1.u_t * w2.u + w1.u * w2.u_t)
        + 2.0 * p.p_tt * w1.u * w2.u
    )
    return SpaceTimeField(values, FieldRole.SOURCE, w1.dt)


def direct_linearized(
    w1: Solution,
    w2: Solution,
    p: NonlinearityField,
    coeff: Coefficients,
    grid: Grid,
    solver: MGTSolver | None = None,
) -> Solution:
    """Solve P w = F(p, w1, w2) with zero boundary and initial data."""
    solver = solver or MGTSolver(coeff, grid)
    source = linearized_source(p, w1, w2).values
    return solver.solve(DataTuple.source_only(source, grid))


def cross_difference(
    design: EpsilonDesign,
    p: NonlinearityField,
    coeff: Coefficients,
    grid: Grid,
    runner=None,
) -> Solution:
    """
    [u(eps1, eps2) - u(eps1, 0) - u(0, eps2)] / (eps1 eps2).

    u(0, 0) vanishes for zero base data and is not solved. With a ``runner``
    the three nonlinear solves run as separate tasks, each with its own solver.
    """
    design.check_smallness(grid)
    weights = [(design.eps1, design.eps2), (design.eps1, 0.0), (0.0, design.eps2)]

    def one(pair, solver=None):
        u, report = solve_nonlinear(design.combined(*pair), p, coeff, grid, solver=solver)
        logger.debug("eps=%s solved in %d Picard iterations", pair, report.iterations)
        return u

    if runner is None:
        solver = MGTSolver(coeff, grid)
        u_both, u_first, u_second = (one(pair, solver) for pair in weights)
    else:
        u_both, u_first, u_second = runner.map(
            one, weights, names=[f"eps={a:g},{b:g}" for a, b in weights]
        )
    return (u_both - u_first - u_second).scaled(1.0 / (design.eps1 * design.eps2))


def linearize_pair(
    design: EpsilonDesign,
    p: NonlinearityField,
    coeff: Coefficients,
    grid: Grid,
    method: str = "direct",
    runner=None,
) -> LinearizedPair:
    """First-order solutions, second-order linearization by ``method`` and its W-reduction."""
    solver = MGTSolver(coeff, grid)
    w1 = solver.solve(design.data1)
    w2 = solver.solve(design.data2)
    if method == "direct":
        w = direct_linearized(w1, w2, p, coeff, grid, solver=solver)
    elif method == "cross_difference":
        w = cross_difference(design, p, coeff, grid, runner=runner)
    else:
        raise ArgumentError(f"unknown linearization method: {method!r}")
    source = linearized_source(p, w1, w2).values
    return LinearizedPair(w1, w2, w, reduce_to_W(w, coeff, grid, source=source))


def reduce_to_W(
    w: Solution, coeff: Coefficients, grid: Grid, source: np.ndarray | None = None
) -> WReduction:
    """
    W = w_t + beta w and the interior residual of
    W_tt - b Lap W + gamma W_t - (source + gamma beta w_t).
    """
    beta, gamma = coeff.beta, coeff.gamma
    W = w.u_t + beta * w.u
    W_t = w.u_tt + beta * w.u_t
    W_tt = time_derivative(W_t, grid.dt)
    rhs = gamma * beta * w.u_t
    if source is not None:
        rhs = rhs + source
    residual = (W_tt - coeff.b * apply_laplacian(W, grid) + gamma * W_t - rhs) * grid.interior
    return WReduction(W=W, W_t=W_t, residual=residual, residual_norm=l2_q(residual, grid))
