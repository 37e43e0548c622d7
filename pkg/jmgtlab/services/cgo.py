"""
High-frequency probe construction for P u = 0.

A probe is exp(i w (phi + t)) (a1 + a2 / w) + R, where phi solves the eikonal
equation b |grad phi|^2 = 1, a1 and a2 solve transport equations along the
characteristics r + t = const in polar coordinates about the source point,
and the remainder R solves the linear problem with the residual source.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.interpolate import CubicSpline

from jmgtlab.config import settings
from jmgtlab.errors import AmplitudeRangeError, ArgumentError, GeometryError, ResolutionError
from jmgtlab.models.coefficients import Coefficients
from jmgtlab.models.fields import DataTuple, Solution
from jmgtlab.models.grid import Grid
from jmgtlab.models.probe import (
    AmplitudeField,
    AmplitudeSpec,
    CGOProbe,
    PhaseField,
    ProbeGeometry,
    RemainderNorms,
    _inside_closure,
)
from jmgtlab.services.mgt_core import MGTSolver, apply_P, l2_q
from jmgtlab.services.stencils import apply_laplacian, smooth_gradient, time_derivative

logger = logging.getLogger(__name__)

# exp(-x) underflows double precision beyond this exponent
MAX_EXPONENT = 700.0


# ----------------------------------------------------------------------- phase


def eikonal_phase(geom: ProbeGeometry, coeff: Coefficients, grid: Grid) -> PhaseField:
    """phi(x) = |x - q| / sqrt(b) with closed-form gradient and Laplacian."""
    if _inside_closure(geom.q, grid):
        raise GeometryError(f"source point {geom.q} lies in the closed domain")
    xx, yy = grid.mesh()
    r, theta = geom.polar(xx, yy)
    rho = r * geom.sqrt_b
    return PhaseField(
        values=r,
        grad_x=(xx - geom.q[0]) / (rho * geom.sqrt_b),
        grad_y=(yy - geom.q[1]) / (rho * geom.sqrt_b),
        laplacian=1.0 / (rho * geom.sqrt_b),
        r=r,
        theta=theta,
    )


def eikonal_residual(phase: PhaseField, coeff: Coefficients, grid: Grid) -> dict[str, float]:
    """max |b |grad phi|^2 - 1| on interior nodes, closed-form and finite-difference."""
    interior = grid.interior
    analytic = np.abs(coeff.b * phase.gradient_norm2() - 1.0)
    gx, gy = smooth_gradient(phase.values, grid)
    discrete = np.abs(coeff.b * (gx**2 + gy**2) - 1.0)
    return {
        "analytic": float(np.max(analytic[interior])),
        "discrete": float(np.max(discrete[interior])),
    }


# ------------------------------------------------------------------ amplitudes


@dataclass
class _RadialKernel:
    """K(r, t) = g(r + t) exp(-gamma t / 2) r^(-1/2) and its derivatives."""

    k: np.ndarray
    k_t: np.ndarray
    k_tt: np.ndarray
    k_r: np.ndarray
    k_rr: np.ndarray
    k_rt: np.ndarray


def _radial_kernel(spec: AmplitudeSpec, r: np.ndarray, t: np.ndarray) -> _RadialKernel:
    g, g1, g2 = spec.envelope(r + t)
    half_gamma = 0.5 * spec.gamma
    e = np.exp(-half_gamma * t)
    w = r**-0.5
    w1 = -0.5 * r**-1.5
    w2 = 0.75 * r**-2.5
    return _RadialKernel(
        k=g * e * w,
        k_t=(g1 - half_gamma * g) * e * w,
        k_tt=(g2 - spec.gamma * g1 + half_gamma**2 * g) * e * w,
        k_r=(g1 * w + g * w1) * e,
        k_rr=(g2 * w + 2.0 * g1 * w1 + g * w2) * e,
        k_rt=((g2 - half_gamma * g1) * w + (g1 - half_gamma * g) * w1) * e,
    )


def _check_range(spec: AmplitudeSpec, r_max: float, t_final: float) -> None:
    exponent = 0.5 * spec.mu * (r_max + t_final) + 0.5 * abs(spec.gamma) * t_final
    if exponent > MAX_EXPONENT:
        raise AmplitudeRangeError(
            f"amplitude exponent {exponent:.1f} exceeds {MAX_EXPONENT}; reduce mu"
        )


def amplitude_a1(spec: AmplitudeSpec, geom: ProbeGeometry, grid: Grid) -> AmplitudeField:
    """a1 = exp(-mu (r + t) / 2) chi(r + t) Phi(theta) exp(-gamma t / 2) d^(-1/4), d = r^2."""
    xx, yy = grid.mesh()
    r, theta = geom.polar(xx, yy)
    _check_range(spec, float(r[grid.inside].max()), grid.t_final)
    t = grid.times[:, None, None]
    kernel = _radial_kernel(spec, r[None], t)
    values = kernel.k * spec.profile.value(theta)[None]
    return AmplitudeField(values.astype(complex))


def _transport_sources(spec, coeff, r, t):
    """Radial and angular parts of xi = C1(a1) / 2 (xi = Phi * radial + Phi'' * angular)."""
    kern = _radial_kernel(spec, r, t)
    beta = coeff.beta
    q = (
        3.0 * kern.k_tt
        + 2.0 * coeff.alpha * kern.k_t
        - 2.0 * kern.k_rt
        - kern.k_t / r
        - kern.k_rr
        - kern.k_r / r
        - 2.0 * beta * kern.k_r
        - beta * kern.k / r
    )
    return 0.5j * q, -0.5j * kern.k / r**2


def integrate_characteristics(
    source: np.ndarray,
    initial: np.ndarray,
    dt: float,
    transfer: np.ndarray,
) -> np.ndarray:
    """
    Solve a_t - a_r + zeta a = source on an (r, t) table with r-spacing dt.

    Args:
        source: (nt + 1, n_r) values at r_j = r_0 + j dt, t_n = n dt
        initial: (n_r,) values of a at t = 0
        dt: Table spacing in r and t
        transfer: (n_r - 1,) factors exp(-int_{r_j}^{r_j+1} zeta)

    Returns:
        (nt + 1, n_r - nt) values at the first n_r - nt radii. The characteristic
        through (r_j, t_n+1) passes (r_j+1, t_n); the source is integrated with
        the trapezoidal rule.
    """
    n_levels, n_r = source.shape
    nt = n_levels - 1
    n_keep = n_r - nt
    if n_keep < 1:
        raise ArgumentError(f"table of {n_r} radii is too short for {nt} steps")
    out = np.empty((n_levels, n_keep), dtype=np.result_type(source, initial, complex))
    current = np.asarray(initial, dtype=out.dtype)
    out[0] = current[:n_keep]
    for n in range(nt):
        m = current.size - 1
        f = transfer[:m]
        current = f * current[1:] + 0.5 * dt * (f * source[n, 1 : m + 1] + source[n + 1, :m])
        out[n + 1] = current[:n_keep]
    return out


def _spline_radial(table_r: np.ndarray, table: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Cubic spline along r for every time level; complex tables are split."""
    real = CubicSpline(table_r, table.real, axis=1)(r)
    imag = CubicSpline(table_r, table.imag, axis=1)(r)
    return real + 1j * imag


def amplitude_a2(
    spec: AmplitudeSpec, geom: ProbeGeometry, coeff: Coefficients, grid: Grid
) -> AmplitudeField:
    """
    Second amplitude from a2_t - a2_r + (gamma/2 - 1/(2r)) a2 = C1(a1) / 2.

    Initial value chi(r) Phi(theta) (Phi(theta) when no cutoff). The source
    separates into Phi(theta) and Phi''(theta) parts, so the characteristic
    quadrature runs on one (r, t) table and is splined to the grid radii.
    Nodes outside the closed domain get a2 = 0.
    """
    dt, nt = grid.dt, grid.nt
    xx, yy = grid.mesh()
    r, theta = geom.polar(xx, yy)
    inside = grid.inside
    r_in = r[inside]
    _check_range(spec, float(r_in.max()), grid.t_final)

    # 1. Table radii r_j = r_lo + j dt, long enough to follow every characteristic
    r_lo = max(float(r_in.min()) - dt, 0.5 * float(r_in.min()))
    n_keep = int(np.ceil((float(r_in.max()) + dt - r_lo) / dt)) + 2
    table_r = r_lo + dt * np.arange(n_keep + nt)
    t = grid.times[:, None]

    # 2. Transport sources and integrating factor across one table cell
    radial, angular = _transport_sources(spec, coeff, table_r[None, :], t)
    transfer = np.exp(-0.5 * spec.gamma * dt) * np.sqrt(table_r[1:] / table_r[:-1])
    initial = (
        spec.cutoff.value(table_r) if spec.cutoff is not None else np.ones_like(table_r)
    )

    # 3. March along characteristics and spline to the node radii
    radial_part = integrate_characteristics(radial, initial, dt, transfer)
    angular_part = integrate_characteristics(angular, np.zeros_like(table_r), dt, transfer)
    kept_r = table_r[:n_keep]
    phi = spec.profile.value(theta[inside])
    phi_2 = spec.profile.second_derivative(theta[inside])

    values = np.zeros(grid.field_shape, dtype=complex)
    values[:, inside] = (
        phi[None] * _spline_radial(kept_r, radial_part, r_in)
        + phi_2[None] * _spline_radial(kept_r, angular_part, r_in)
    )

    src_radial, src_angular = _transport_sources(spec, coeff, r_in[None, :], t)
    source = np.zeros(grid.field_shape, dtype=complex)
    source[:, inside] = phi[None] * src_radial + phi_2[None] * src_angular
    return AmplitudeField(values, transport_source=source)


def transport_residual(
    amplitude: AmplitudeField,
    phase: PhaseField,
    coeff: Coefficients,
    grid: Grid,
    source: np.ndarray | None = None,
) -> float:
    """
    Relative L2(Q) residual of a_t - a_r + (gamma/2 - 1/(2r)) a - source on interior nodes.

    a_r = b grad(phi) . grad(a); ``source`` defaults to the amplitude's own.
    """
    a = amplitude.values
    source = amplitude.transport_source if source is None else source
    a_t = time_derivative(a, grid.dt)
    gx, gy = smooth_gradient(a, grid)
    a_r = coeff.b * (phase.grad_x * gx + phase.grad_y * gy)
    zeta = 0.5 * coeff.gamma - 0.5 / phase.r
    residual = a_t - a_r + zeta * a
    if source is not None:
        residual = residual - source
    interior = grid.interior
    scale = l2_q(a * interior, grid)
    if scale == 0.0:
        return l2_q(residual * interior, grid)
    return l2_q(residual * interior, grid) / scale


# ---------------------------------------------------------- sigma coefficients


def _coefficient_terms(a: np.ndarray, phase: PhaseField, coeff: Coefficients, grid: Grid):
    """Generic coefficient operators of P(exp(i w Theta) A) for powers w^3, w^2, w^1."""
    b, c2, alpha = coeff.b, coeff.c**2, coeff.alpha
    grad2 = phase.gradient_norm2()
    a_t = time_derivative(a, grid.dt)
    a_tt = time_derivative(a_t, grid.dt)
    gx, gy = smooth_gradient(a, grid)
    gtx, gty = smooth_gradient(a_t, grid)
    dphi_da = phase.grad_x * gx + phase.grad_y * gy
    dphi_dat = phase.grad_x * gtx + phase.grad_y * gty
    lap_phi = phase.laplacian

    c3 = -1j * (1.0 - b * grad2) * a
    c2_ = (
        -3.0 * a_t
        - alpha * a
        + b * grad2 * a_t
        + b * (2.0 * dphi_da + lap_phi * a)
        + c2 * grad2 * a
    )
    c1 = 1j * (
        3.0 * a_tt
        + 2.0 * alpha * a_t
        - b * (2.0 * dphi_dat + lap_phi * a_t)
        - b * apply_laplacian(a, grid)
        - c2 * (2.0 * dphi_da + lap_phi * a)
    )
    return c3, c2_, c1


def sigma_coefficients(
    phase: PhaseField,
    a1: np.ndarray,
    a2: np.ndarray,
    coeff: Coefficients,
    grid: Grid,
) -> dict[int, np.ndarray]:
    """
    Coefficient fields of w^3, w^2, w^1, w^0, w^-1 in exp(-i w Theta) P(ansatz).

    Interior nodes only; all other nodes are zero.
    """
    c3_1, c2_1, c1_1 = _coefficient_terms(a1, phase, coeff, grid)
    c3_2, c2_2, c1_2 = _coefficient_terms(a2, phase, coeff, grid)
    p_a1 = apply_P(a1, coeff, grid).values
    p_a2 = apply_P(a2, coeff, grid).values
    interior = grid.interior
    return {
        3: c3_1 * interior,
        2: (c2_1 + c3_2) * interior,
        1: (c1_1 + c2_2) * interior,
        0: (c1_2 + p_a1) * interior,
        -1: p_a2 * interior,
    }


@dataclass
class ExpansionAudit:
    """Relative L2(Q) sizes of the w^3, w^2, w^1 coefficients of P(ansatz)."""

    sigma3: float
    sigma2: float
    sigma1: float
    eikonal_tol: float
    transport_tol: float
    flags: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.flags

    def to_dict(self) -> dict:
        return {
            "sigma3": self.sigma3,
            "sigma2": self.sigma2,
            "sigma1": self.sigma1,
            "eikonal_tol": self.eikonal_tol,
            "transport_tol": self.transport_tol,
            "flags": self.flags,
            "passed": self.passed,
        }


def sigma_expansion_audit(
    probe: CGOProbe,
    coeff: Coefficients,
    grid: Grid,
    phase: PhaseField | None = None,
    eikonal_tol: float | None = None,
    transport_tol: float = 0.05,
) -> ExpansionAudit:
    """
    Check that the w^3, w^2, w^1 coefficients of P(ansatz) vanish.

    Sizes are relative to ||a1||_{L2(Q)} on interior nodes. ``phase`` replaces
    the probe's phase, which is how a perturbed phase is audited.
    """
    eikonal_tol = settings.rounding_tol * 1e2 if eikonal_tol is None else eikonal_tol
    phase = phase or probe.phase
    coefs = sigma_coefficients(phase, probe.a1.values, probe.a2.values, coeff, grid)
    scale = l2_q(probe.a1.values * grid.interior, grid) or 1.0
    audit = ExpansionAudit(
        sigma3=l2_q(coefs[3], grid) / scale,
        sigma2=l2_q(coefs[2], grid) / scale,
        sigma1=l2_q(coefs[1], grid) / scale,
        eikonal_tol=eikonal_tol,
        transport_tol=transport_tol,
    )
    if audit.sigma3 > eikonal_tol:
        audit.flags.append("sigma3")
    if audit.sigma2 > transport_tol:
        audit.flags.append("sigma2")
    if audit.sigma1 > transport_tol:
        audit.flags.append("sigma1")
    if audit.flags:
        logger.warning("sigma expansion audit flagged %s", ", ".join(audit.flags))
    return audit


# ---------------------------------------------------------------------- probes


def check_resolution(
    omega: float, coeff: Coefficients, grid: Grid, min_points: float | None = None
) -> None:
    """
    Require ``min_points`` nodes per wavelength 2 pi sqrt(b) / |w| in space and
    per period 2 pi / |w| in time.

    Raises:
        ResolutionError: carries the minimal nx, ny, nt
    """
    min_points = settings.min_points_per_wavelength if min_points is None else min_points
    wavelength = 2.0 * np.pi * np.sqrt(coeff.b) / abs(omega)
    period = 2.0 * np.pi / abs(omega)
    h_max, dt_max = wavelength / min_points, period / min_points
    if max(grid.hx, grid.hy) <= h_max and grid.dt <= dt_max:
        return
    required = {
        "nx": int(np.ceil((grid.x[-1] - grid.x[0]) / h_max)) + 1,
        "ny": int(np.ceil((grid.y[-1] - grid.y[0]) / h_max)) + 1,
        "nt": int(np.ceil(grid.t_final / dt_max)),
    }
    raise ResolutionError(
        f"frequency {abs(omega):.4g} needs {min_points:g} points per wavelength: "
        f"nx >= {required['nx']}, ny >= {required['ny']}, nt >= {required['nt']}",
        required=required,
    )


def assemble_probe(
    sigma: float,
    spec: AmplitudeSpec,
    geom: ProbeGeometry,
    coeff: Coefficients,
    grid: Grid,
    sign: int = 1,
    scale: float = 1.0,
) -> CGOProbe:
    """
    Assemble exp(i w (phi + t)) (a1 + a2 / w) with w = sign * scale * sigma.

    The induced data are the boundary trace and the initial triple of the
    ansatz. Time derivatives carry the phase exactly and difference only the
    envelope A = a1 + a2 / w, so u_t = e(i w A + A_t) and
    u_tt = e(-w^2 A + 2 i w A_t + A_tt) with e = exp(i w Theta).

    Raises:
        ResolutionError: grid too coarse for |w|, or cutoff pad under 3 dt
    """
    if sigma <= 0.0:
        raise ArgumentError(f"sigma must be positive, got {sigma}")
    if sign not in (1, -1):
        raise ArgumentError(f"sign must be +1 or -1, got {sign}")
    if not spec.profile.smooth:
        raise ArgumentError("probe amplitudes need a smooth angular profile")
    omega = sign * scale * sigma
    check_resolution(omega, coeff, grid)
    if spec.cutoff is not None and geom.pad_time < 3.0 * grid.dt:
        required_nt = int(np.ceil(3.0 * grid.t_final / geom.pad_time))
        raise ResolutionError(
            f"cutoff pad {geom.pad_time:.4g} is under 3 dt; need nt >= {required_nt}",
            required={"nt": required_nt},
        )

    phase = eikonal_phase(geom, coeff, grid)
    a1 = amplitude_a1(spec, geom, grid)
    a2 = amplitude_a2(spec, geom, coeff, grid)

    theta_total = phase.values[None] + grid.times[:, None, None]
    inside = grid.inside
    carrier = np.exp(1j * omega * theta_total)
    envelope = (a1.values + a2.values / omega) * inside
    envelope_t = time_derivative(envelope, grid.dt)
    envelope_tt = time_derivative(envelope_t, grid.dt)
    u = carrier * envelope
    u_t = carrier * (1j * omega * envelope + envelope_t)
    u_tt = carrier * (-(omega**2) * envelope + 2j * omega * envelope_t + envelope_tt)
    ansatz = Solution(u, u_t, u_tt, grid.dt, "ansatz")
    induced = DataTuple(h=grid.boundary_values(u), u0=u[0], u1=u_t[0], u2=u_tt[0])

    logger.debug("assembled probe sigma=%.4g omega=%.4g at q=%s", sigma, omega, geom.q)
    return CGOProbe(
        sigma=sigma,
        sign=sign,
        scale=scale,
        geometry=geom,
        spec=spec,
        phase=phase,
        a1=a1,
        a2=a2,
        induced_data=induced,
        ansatz=ansatz,
    )


def remainder_source(probe: CGOProbe, coeff: Coefficients, grid: Grid) -> np.ndarray:
    """-exp(i w Theta) (C1(a2) + P a1 + P a2 / w) on interior nodes."""
    omega = probe.omega
    coefs = sigma_coefficients(probe.phase, probe.a1.values, probe.a2.values, coeff, grid)
    theta_total = probe.phase.values[None] + grid.times[:, None, None]
    return -np.exp(1j * omega * theta_total) * (coefs[0] + coefs[-1] / omega)


def remainder_solve(
    probe: CGOProbe,
    coeff: Coefficients,
    grid: Grid,
    solver: MGTSolver | None = None,
) -> tuple[Solution, RemainderNorms]:
    """Solve P R = remainder source with zero data; attach R and its norms to the probe."""
    solver = solver or MGTSolver(coeff, grid)
    remainder = solver.solve(DataTuple.source_only(remainder_source(probe, coeff, grid), grid))
    gx, gy = smooth_gradient(remainder.u, grid)
    inside = grid.inside
    norms = RemainderNorms(
        sigma=probe.sigma,
        norm_r=l2_q(remainder.u, grid),
        norm_rt=l2_q(remainder.u_t, grid),
        norm_grad_r=float(np.sqrt(l2_q(gx * inside, grid) ** 2 + l2_q(gy * inside, grid) ** 2)),
    )
    probe.remainder = remainder
    probe.norms = norms
    logger.info(
        "remainder sigma=%.4g: |R|=%.3e |R_t|=%.3e |grad R|=%.3e",
        probe.sigma,
        norms.norm_r,
        norms.norm_rt,
        norms.norm_grad_r,
    )
    return remainder, norms


def probe_solution(
    probe: CGOProbe,
    coeff: Coefficients,
    grid: Grid,
    solver: MGTSolver | None = None,
) -> Solution:
    """Corrected field ansatz + R, solving for R first when it is missing."""
    if probe.remainder is None:
        remainder_solve(probe, coeff, grid, solver)
    return probe.solution()


def decay_slope(sigmas, norms) -> float:
    """Least-squares slope of log(norm) against log(sigma)."""
    sigmas = np.asarray(sigmas, dtype=float)
    norms = np.asarray(norms, dtype=float)
    if sigmas.size < 2:
        raise ArgumentError("decay slope needs at least two frequencies")
    return float(np.polyfit(np.log(sigmas), np.log(norms), 1)[0])


def sigma_sweep(
    sigmas: list[float],
    spec: AmplitudeSpec,
    geom: ProbeGeometry,
    coeff: Coefficients,
    grid: Grid,
    runner=None,
    sign: int = 1,
    scale: float = 1.0,
) -> pd.DataFrame:
    """Remainder norms over a frequency sweep (columns sigma, norm_R, norm_Rt, norm_gradR)."""
    for sigma in sigmas:
        check_resolution(sign * scale * sigma, coeff, grid)

    def one(sigma):
        probe = assemble_probe(sigma, spec, geom, coeff, grid, sign=sign, scale=scale)
        _, norms = remainder_solve(probe, coeff, grid)
        return norms.to_dict()

    if runner is None:
        rows = [one(sigma) for sigma in sigmas]
    else:
        rows = runner.map(one, sigmas, names=[f"sigma={s:g}" for s in sigmas])
    return pd.DataFrame(rows, columns=["sigma", "norm_R", "norm_Rt", "norm_gradR"])
