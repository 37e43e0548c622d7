"""
Measurement functionals and the integral identity behind the reconstruction.

For the second-order linearization w (zero data, P w = F) and any y with
y_tt - b Lap y - gamma y_t = 0, integrating by parts against W = w_t + beta w gives

    int_Q y (F + gamma beta w_t) = -b int_Sigma y d_nu W
                                   + int_Omega (y W_t - y_t W + gamma y W)(T),

so the right-hand side only needs the measured Neumann trace and final triple.
"""

import logging

import numpy as np

from jmgtlab.errors import DataError, ShapeError
from jmgtlab.models.coefficients import Coefficients
from jmgtlab.models.fields import Solution
from jmgtlab.models.grid import Grid
from jmgtlab.models.measurement import AdjointProbe, MeasurementMode, MeasurementRecord
from jmgtlab.models.nonlinearity import NonlinearityField
from jmgtlab.models.probe import ProbeGeometry
from jmgtlab.services.cgo import eikonal_phase
from jmgtlab.services.linearize import linearized_source
from jmgtlab.services.mgt_core import DampedWaveSolver, dtn_trace, l2_q
from jmgtlab.services.stencils import (
    apply_laplacian,
    integrate_boundary,
    integrate_space,
    integrate_time,
    time_derivative,
)

logger = logging.getLogger(__name__)


def adjoint_amplitude(geom: ProbeGeometry, coeff: Coefficients, grid: Grid) -> np.ndarray:
    """a0 = exp(gamma t / 2) r^(-1/2) about the source point."""
    xx, yy = grid.mesh()
    r, _ = geom.polar(xx, yy)
    return np.exp(0.5 * coeff.gamma * grid.times)[:, None, None] * r[None] ** -0.5


def _adjoint_operator(values: np.ndarray, coeff: Coefficients, grid: Grid) -> np.ndarray:
    """y_tt - b Lap y - gamma y_t on interior nodes."""
    y_t = time_derivative(values, grid.dt)
    y_tt = time_derivative(y_t, grid.dt)
    return (y_tt - coeff.b * apply_laplacian(values, grid) - coeff.gamma * y_t) * grid.interior


def build_adjoint_probe(
    sigma: float, geom: ProbeGeometry, coeff: Coefficients, grid: Grid
) -> AdjointProbe:
    """
    y = exp(-i sigma (phi + t)) a0 + r0.

    The eikonal and transport equations remove every sigma-dependent term of
    L0(exp(-i sigma Theta) a0), leaving exp(-i sigma Theta) L0(a0). r0 solves
    the damped wave equation (damping -gamma) with that source negated and
    zero data. Time derivatives of the leading part are exact.
    """
    phase = eikonal_phase(geom, coeff, grid)
    a0 = adjoint_amplitude(geom, coeff, grid)
    theta_total = phase.values[None] + grid.times[:, None, None]
    carrier = np.exp(-1j * sigma * theta_total)
    envelope = a0 * grid.inside

    solver = DampedWaveSolver(coeff.b, -coeff.gamma, grid)
    r0 = solver.solve(source=-carrier * _adjoint_operator(envelope, coeff, grid))

    rate = -1j * sigma + 0.5 * coeff.gamma
    leading = carrier * envelope
    y = Solution(leading, rate * leading, rate**2 * leading, grid.dt) + r0
    scale = l2_q(leading, grid)
    residual = l2_q(_adjoint_operator(y.u, coeff, grid), grid) / (sigma**2 * scale)
    norms = {"norm_r0": l2_q(r0.u, grid), "norm_r0t": l2_q(r0.u_t, grid)}
    logger.debug("adjoint probe sigma=%.4g: |r0|=%.3e", sigma, norms["norm_r0"])
    return AdjointProbe(sigma=sigma, a0=a0, y=y, r0=r0, r0_norms=norms, residual=residual)


def record_measurement(
    w: Solution,
    grid: Grid,
    mode: MeasurementMode | str = MeasurementMode.LAMBDA_T,
    sigma: float = 0.0,
    probe_ids: dict | None = None,
) -> MeasurementRecord:
    """Neumann trace and final triple of a solved field."""
    return MeasurementRecord(
        dtn_trace=dtn_trace(w, grid).values,
        final_triple=w.final_triple(),
        mode=MeasurementMode(mode),
        sigma=sigma,
        probe_ids=probe_ids or {},
    )


def space_time_pairing(a: np.ndarray, b: np.ndarray, grid: Grid) -> complex:
    """int_Q a b dx dt (bilinear, no conjugation)."""
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ShapeError(f"pairing of shapes {a.shape} and {b.shape}")
    return complex(integrate_time(integrate_space(a * b, grid), grid.dt))


def _adjoint_values(y) -> np.ndarray:
    if isinstance(y, AdjointProbe):
        return y.y.u
    if isinstance(y, Solution):
        return y.u
    return np.asarray(y)


def identity_lhs(
    y,
    p: NonlinearityField,
    w1: Solution,
    w2: Solution,
    grid: Grid,
    coeff: Coefficients | None = None,
    w: Solution | None = None,
) -> complex:
    """
    int_Q y F(p, w1, w2), plus gamma beta int_Q y w_t when ``w`` and ``coeff`` are given.
    """
    values = _adjoint_values(y)
    total = space_time_pairing(values, linearized_source(p, w1, w2).values, grid)
    if w is not None and coeff is not None:
        total += coeff.gamma * coeff.beta * space_time_pairing(values, w.u_t, grid)
    return total


def identity_rhs(y, record: MeasurementRecord, coeff: Coefficients, grid: Grid) -> complex:
    """
    -b int_Sigma y d_nu W + int_Omega (y W_t - y_t W + gamma y W) at t = T.

    d_nu W = d_t(d_nu w) + beta d_nu w from the measured trace; W(T) and W_t(T)
    from the final triple.

    Raises:
        DataError: the record lacks its trace or final triple
    """
    record.validate(grid)
    if isinstance(y, AdjointProbe):
        y = y.y
    if not isinstance(y, Solution):
        raise DataError("identity right-hand side needs y with its time derivative")
    beta = coeff.beta

    dn_w = record.dtn_trace
    dn_W = time_derivative(dn_w, grid.dt) + beta * dn_w
    boundary = integrate_time(integrate_boundary(grid.boundary_values(y.u) * dn_W, grid), grid.dt)

    w_T, w_t_T, w_tt_T = record.final_triple
    W_T = w_t_T + beta * w_T
    W_t_T = w_tt_T + beta * w_t_T
    y_T, y_t_T = y.u[-1], y.u_t[-1]
    final = integrate_space(y_T * W_t_T - y_t_T * W_T + coeff.gamma * y_T * W_T, grid)
    return complex(-coeff.b * boundary + final)


def measurement_sample(rhs: complex, sigma: float) -> complex:
    """Normalized pairing -rhs / (2 sigma^2); tends to the weighted ray integral."""
    return -rhs / (2.0 * sigma**2)
