"""
Linear Moore-Gibson-Thompson solver and diagnostics.

The operator P = d_t^3 + alpha d_t^2 - b Lap d_t - c^2 Lap is stepped as a
first-order system in (u, u_t, u_tt) with the implicit trapezoidal rule. The
step matrix only depends on the coefficients and the grid, so it is factored
once per solver and reused for every time step and every right-hand side.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import sparse
from scipy.sparse.linalg import splu

from jmgtlab.config import settings
from jmgtlab.errors import (
    ArgumentError,
    DivergenceError,
    InsufficientDataError,
    SolverFailureError,
)
from jmgtlab.models.coefficients import Coefficients
from jmgtlab.models.fields import DataTuple, FieldRole, Solution, SpaceTimeField
from jmgtlab.models.grid import Grid
from jmgtlab.services.stencils import (
    apply_laplacian,
    integrate_boundary,
    integrate_space,
    integrate_time,
    laplacian_matrix,
    normal_derivative,
    smooth_gradient,
    smooth_hessian,
    smooth_laplacian,
    time_derivative,
)

logger = logging.getLogger(__name__)


class Scheme(str, Enum):
    """Time-stepping schemes of the linear solver."""

    TRAPEZOIDAL = "trapezoidal"
    W_REDUCTION = "w_reduction"


class NormKind(str, Enum):
    """Discrete norms available through ``discrete_norms``."""

    L2_Q = "L2_Q"
    L2_OMEGA_AT_T = "L2_Omega_at_t"
    H1_OMEGA_AT_T = "H1_Omega_at_t"
    EM_SURROGATE = "Em_surrogate"


# ---------------------------------------------------------------------- steppers


class _ImplicitStepper:
    """
    Shared machinery: one sparse step matrix acting on interior unknowns.

    Boundary and exterior rows are identities. Boundary values of every state
    component are imposed exactly from the Dirichlet data, and interior rows
    see them as known neighbours, so the discrete equation holds to rounding
    at every interior node.
    """

    def __init__(self, grid: Grid, diagonal: float, lap_weight: float):
        self.grid = grid
        self._lap = laplacian_matrix(grid)
        interior = grid.interior.ravel()
        self._interior = interior
        self._mask = interior.astype(float)
        self._exterior = ~grid.inside.ravel()
        self._bidx = grid.boundary_index

        matrix = (
            sparse.diags(np.where(interior, diagonal, 1.0))
            - lap_weight * (self._lap @ sparse.diags(self._mask))
        ).tocsc()
        try:
            self._lu = splu(matrix)
        except RuntimeError as exc:
            raise SolverFailureError(f"step matrix is singular: {exc}", step=0) from exc

    def _solve(self, rhs: np.ndarray, boundary_values: np.ndarray, step: int) -> np.ndarray:
        """Interior unknowns from ``rhs``; boundary entries set to ``boundary_values``."""
        rhs = np.where(self._interior, rhs, 0.0)
        real = self._lu.solve(np.ascontiguousarray(rhs.real))
        if np.any(rhs.imag):
            result = real + 1j * self._lu.solve(np.ascontiguousarray(rhs.imag))
        else:
            result = real.astype(complex)
        if not np.all(np.isfinite(result)):
            raise DivergenceError("non-finite values in step solve", step=step)
        result[self._bidx] = boundary_values
        return result

    def _boundary_derivatives(self, h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if not np.any(h):
            return np.zeros_like(h), np.zeros_like(h)
        h_t = time_derivative(h, self.grid.dt)
        return h_t, time_derivative(h_t, self.grid.dt)

    def _predict(self, values: np.ndarray, boundary_values: np.ndarray) -> np.ndarray:
        """Explicit part of a next-level value with the exact boundary entries."""
        values = values.copy()
        values[self._bidx] = boundary_values
        values[self._exterior] = 0.0
        return values


class MGTSolver(_ImplicitStepper):
    """
    Linear MGT solver for one coefficient set on one grid.

    Args:
        coeff: Admissible coefficients
        grid: Space-time grid
        scheme: ``trapezoidal`` steps (u, u_t, u_tt); ``w_reduction`` steps
            (u, W, W_t) with W = u_t + beta u and recovers u through the
            integrating factor exp(-beta t)
    """

    def __init__(self, coeff: Coefficients, grid: Grid, scheme: Scheme | str = Scheme.TRAPEZOIDAL):
        self.coeff = coeff
        self.scheme = Scheme(scheme)
        dt = grid.dt
        alpha, b, c2 = coeff.alpha, coeff.b, coeff.c**2
        beta, gamma = coeff.beta, coeff.gamma

        if gamma <= 0.0:
            logger.warning(
                "gamma = %.4g <= 0: the continuous problem may grow in time", gamma
            )

        if self.scheme == Scheme.TRAPEZOIDAL:
            diagonal = 1.0 + 0.5 * alpha * dt
            lap_weight = 0.25 * b * dt**2 + 0.125 * c2 * dt**3
        else:
            diagonal = (
                1.0
                + 0.5 * gamma * dt
                - 0.25 * gamma * beta * dt**2
                + 0.125 * gamma * beta**2 * dt**3
            )
            lap_weight = 0.25 * b * dt**2
        super().__init__(grid, diagonal, lap_weight)

    def solve(self, data: DataTuple) -> Solution:
        """
        Solve P u = f with u = h on the boundary and initial triple (u0, u1, u2).

        Raises:
            ShapeError: data does not match the grid
            DivergenceError: non-finite values at some step
        """
        grid = self.grid
        data.validate(grid)
        n_levels, n_nodes = grid.nt + 1, grid.n_nodes

        f = data.source(grid).reshape(n_levels, n_nodes)
        h_t, h_tt = self._boundary_derivatives(data.h)

        u = np.zeros((n_levels, n_nodes), dtype=complex)
        v = np.zeros_like(u)
        a = np.zeros_like(u)
        u[0], v[0], a[0] = data.u0.ravel(), data.u1.ravel(), data.u2.ravel()
        for arr in (u, v, a):
            arr[0, self._exterior] = 0.0

        if self.scheme == Scheme.TRAPEZOIDAL:
            self._march_trapezoidal(u, v, a, f, data.h, h_t, h_tt)
        else:
            self._march_w_reduction(u, v, a, f, data.h, h_t, h_tt)

        shape = grid.field_shape
        logger.debug("solved %d steps on %dx%d (%s)", grid.nt, grid.nx, grid.ny, self.scheme.value)
        return Solution(
            u.reshape(shape), v.reshape(shape), a.reshape(shape), grid.dt, self.scheme.value
        )

    def _march_trapezoidal(self, u, v, a, f, h, h_t, h_tt):
        dt, lap, mask = self.grid.dt, self._lap, self._mask
        alpha, b, c2 = self.coeff.alpha, self.coeff.b, self.coeff.c**2
        for n in range(self.grid.nt):
            un, vn, an = u[n], v[n], a[n]
            v_pred = self._predict(vn + 0.5 * dt * an, h_t[n + 1])
            u_pred = self._predict(un + dt * vn + 0.25 * dt**2 * an, h[n + 1])
            rhs = an + 0.5 * dt * (
                -alpha * an
                + b * (lap @ (vn + v_pred))
                + c2 * (lap @ (un + u_pred))
                + f[n]
                + f[n + 1]
            )
            a_next = self._solve(rhs, h_tt[n + 1], step=n + 1)

            u[n + 1] = u_pred + 0.25 * dt**2 * mask * a_next
            v[n + 1] = v_pred + 0.5 * dt * mask * a_next
            a[n + 1] = a_next

    def _march_w_reduction(self, u, v, a, f, h, h_t, h_tt):
        dt, lap, mask = self.grid.dt, self._lap, self._mask
        b, beta, gamma = self.coeff.b, self.coeff.beta, self.coeff.gamma
        decay = np.exp(-beta * dt)
        gb, gb2 = gamma * beta, gamma * beta**2

        # W = u_t + beta u and Z = W_t along the march
        w = v[0] + beta * u[0]
        z = a[0] + beta * v[0]
        w_bdry = h_t + beta * h
        z_bdry = h_tt + beta * h_t
        for n in range(self.grid.nt):
            un = u[n]
            w_pred = self._predict(w + 0.5 * dt * z, w_bdry[n + 1])
            u_pred = decay * (un + 0.5 * dt * w)
            rhs = z + 0.5 * dt * (
                b * (lap @ (w + w_pred))
                - gamma * z
                + gb * (w + w_pred)
                - gb2 * (un + u_pred + 0.5 * dt * w_pred)
                + f[n]
                + f[n + 1]
            )
            z_next = self._solve(rhs, z_bdry[n + 1], step=n + 1)
            w_next = w_pred + 0.5 * dt * mask * z_next
            u_next = self._predict(u_pred + 0.5 * dt * w_next, h[n + 1])

            u[n + 1] = u_next
            v[n + 1] = w_next - beta * u_next
            a[n + 1] = z_next - beta * v[n + 1]
            w, z = w_next, z_next


class DampedWaveSolver(_ImplicitStepper):
    """Trapezoidal solver for y_tt - speed2 Lap y + damping y_t = S."""

    def __init__(self, speed2: float, damping: float, grid: Grid):
        self.speed2 = speed2
        self.damping = damping
        dt = grid.dt
        super().__init__(grid, 1.0 + 0.5 * damping * dt, 0.25 * speed2 * dt**2)

    def solve(
        self,
        source: np.ndarray | None = None,
        boundary: np.ndarray | None = None,
        y0: np.ndarray | None = None,
        y1: np.ndarray | None = None,
    ) -> Solution:
        grid = self.grid
        dt, lap, s, k = grid.dt, self._lap, self.speed2, self.damping
        n_levels, n_nodes = grid.nt + 1, grid.n_nodes

        if source is None:
            src = np.zeros((n_levels, n_nodes), dtype=complex)
        else:
            grid.check_field(source, "source")
            src = np.asarray(source, dtype=complex).reshape(n_levels, n_nodes)
        if boundary is None:
            g = np.zeros((n_levels, grid.n_boundary), dtype=complex)
        else:
            grid.check_trace(boundary, "boundary")
            g = np.asarray(boundary, dtype=complex)
        g_t, _ = self._boundary_derivatives(g)

        y = np.zeros((n_levels, n_nodes), dtype=complex)
        z = np.zeros_like(y)
        if y0 is not None:
            y[0] = np.asarray(y0).ravel()
        if y1 is not None:
            z[0] = np.asarray(y1).ravel()
        y[0, self._exterior] = z[0, self._exterior] = 0.0

        for n in range(grid.nt):
            yn, zn = y[n], z[n]
            y_pred = self._predict(yn + 0.5 * dt * zn, g[n + 1])
            rhs = zn + 0.5 * dt * (s * (lap @ (yn + y_pred)) - k * zn + src[n] + src[n + 1])
            z_next = self._solve(rhs, g_t[n + 1], step=n + 1)
            y[n + 1] = y_pred + 0.5 * dt * self._mask * z_next
            z[n + 1] = z_next

        shape = grid.field_shape
        y, z = y.reshape(shape), z.reshape(shape)
        return Solution(y, z, time_derivative(z, dt), dt, "trapezoidal")


def solve_linear(
    data: DataTuple,
    coeff: Coefficients,
    grid: Grid,
    scheme: Scheme | str = Scheme.TRAPEZOIDAL,
    solver: MGTSolver | None = None,
) -> Solution:
    """Solve the linear MGT problem; pass ``solver`` to reuse a factorization."""
    solver = solver or MGTSolver(coeff, grid, scheme)
    return solver.solve(data)


# ------------------------------------------------------------------- operators


def _values(field) -> np.ndarray:
    if isinstance(field, SpaceTimeField):
        return field.values
    return np.asarray(field)


def apply_L(values: np.ndarray, coeff: Coefficients, grid: Grid) -> np.ndarray:
    """L v = v_tt - b Lap v."""
    v_t = time_derivative(values, grid.dt)
    return time_derivative(v_t, grid.dt) - coeff.b * apply_laplacian(values, grid)


def apply_P(field, coeff: Coefficients, grid: Grid) -> SpaceTimeField:
    """
    Discrete P u by the direct stencil.

    A ``Solution`` contributes its companions u_t, u_tt; a bare field gets its
    time derivatives by repeated second-order differences. Laplacian terms are
    evaluated on interior nodes only.
    """
    if isinstance(field, Solution):
        grid.check_field(field.u, "u")
        u, u_t, u_tt = field.u, field.u_t, field.u_tt
    else:
        u = _values(field)
        grid.check_field(u, "u")
        if u.shape[0] < 4:
            raise InsufficientDataError(f"P needs at least 4 time levels, got {u.shape[0]}")
        u_t = time_derivative(u, grid.dt)
        u_tt = time_derivative(u_t, grid.dt)
    u_ttt = time_derivative(u_tt, grid.dt)

    values = (
        u_ttt
        + coeff.alpha * u_tt
        - coeff.b * apply_laplacian(u_t, grid)
        - coeff.c**2 * apply_laplacian(u, grid)
    )
    return SpaceTimeField(values, FieldRole.SOURCE, grid.dt)


def apply_P_factorized(field, coeff: Coefficients, grid: Grid) -> SpaceTimeField:
    """P u = L u_t + beta L u + gamma u_tt."""
    u = _values(field.u if isinstance(field, Solution) else field)
    grid.check_field(u, "u")
    u_t = time_derivative(u, grid.dt)
    u_tt = time_derivative(u_t, grid.dt)
    values = (
        apply_L(u_t, coeff, grid) + coeff.beta * apply_L(u, coeff, grid) + coeff.gamma * u_tt
    )
    return SpaceTimeField(values, FieldRole.SOURCE, grid.dt)


def scheme_residual(
    solution: Solution, source: np.ndarray | None, coeff: Coefficients, grid: Grid
) -> float:
    """
    L2(Q) norm of the trapezoidal step defect on interior nodes.

    Zero to rounding for any output of the trapezoidal solver with the same
    source; nonzero when ``source`` differs from the one the field was solved with.
    """
    dt = grid.dt
    g = (
        -coeff.alpha * solution.u_tt
        + coeff.b * apply_laplacian(solution.u_t, grid)
        + coeff.c**2 * apply_laplacian(solution.u, grid)
    )
    if source is not None:
        g = g + source
    defect = (solution.u_tt[1:] - solution.u_tt[:-1]) / dt - 0.5 * (g[1:] + g[:-1])
    defect = defect * grid.interior
    return float(np.sqrt(np.sum(integrate_space(np.abs(defect) ** 2, grid)) * dt))


# --------------------------------------------------------------------- energy


def energy(u, u_t=None, u_tt=None, grid: Grid | None = None) -> np.ndarray:
    """
    E(t) = 1/2 int (|u_t|^2 + |u_tt|^2 + |grad u|^2 + |grad u_t|^2 + |Lap u|^2).

    Accepts a ``Solution`` or explicit (u, u_t, u_tt) arrays.
    """
    if isinstance(u, Solution):
        u, u_t, u_tt = u.u, u.u_t, u.u_tt
    if grid is None:
        raise ArgumentError("energy needs the grid")
    for name, arr in (("u", u), ("u_t", u_t), ("u_tt", u_tt)):
        grid.check_field(np.asarray(arr), name)

    gx, gy = smooth_gradient(u, grid)
    gtx, gty = smooth_gradient(u_t, grid)
    density = (
        np.abs(u_t) ** 2
        + np.abs(u_tt) ** 2
        + np.abs(gx) ** 2
        + np.abs(gy) ** 2
        + np.abs(gtx) ** 2
        + np.abs(gty) ** 2
        + np.abs(apply_laplacian(u, grid)) ** 2
    )
    return 0.5 * integrate_space(density, grid).real


def dtn_trace(u, grid: Grid) -> SpaceTimeField:
    """Neumann trace d_nu u on the boundary at every time level."""
    values = u.u if isinstance(u, Solution) else _values(u)
    grid.check_field(values, "u")
    return SpaceTimeField(normal_derivative(values, grid), FieldRole.TRACE, grid.dt)


# --------------------------------------------------------------- compatibility


@dataclass
class CompatibilityReport:
    """Boundary residuals of the compatibility conditions, one per order k."""

    order: int
    residuals: list[float] = field(default_factory=list)
    tolerance: float = 0.0

    @property
    def passed(self) -> bool:
        return all(r <= self.tolerance for r in self.residuals)

    @property
    def first_failure(self) -> int | None:
        for k, r in enumerate(self.residuals):
            if r > self.tolerance:
                return k
        return None

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "residuals": [float(r) for r in self.residuals],
            "tolerance": self.tolerance,
            "passed": self.passed,
            "first_failure": self.first_failure,
        }


def _derivatives_at_zero(values: np.ndarray, dt: float, count: int, n_points: int) -> list:
    """d^k/dt^k at t = 0 for k < count from the interpolating polynomial of the first levels."""
    t = dt * np.arange(n_points)
    flat = values[:n_points].reshape(n_points, -1)
    derivs = []
    coefs_re = P.polyfit(t, flat.real, n_points - 1)
    coefs_im = P.polyfit(t, flat.imag, n_points - 1)
    coefs = coefs_re + 1j * coefs_im
    factorial = 1.0
    for k in range(count):
        if k > 0:
            factorial *= k
        derivs.append((factorial * coefs[k]).reshape(values.shape[1:]))
    return derivs


def check_compatibility(
    data: DataTuple,
    coeff: Coefficients,
    grid: Grid,
    order: int,
    tolerance: float | None = None,
) -> CompatibilityReport:
    """
    Residuals max|d_t^k u(., 0) - d_t^k h(0)| on the boundary for 0 <= k <= order.

    d_t^k u(., 0) for k >= 3 follows from the equation:
    u^(k) = -alpha u^(k-1) + b Lap u^(k-2) + c^2 Lap u^(k-3) + f^(k-3).
    """
    tolerance = settings.compat_tol if tolerance is None else tolerance
    n_points = order + 2
    if grid.nt + 1 < n_points:
        raise InsufficientDataError(
            f"order {order} needs {n_points} time levels, grid has {grid.nt + 1}"
        )
    data.validate(grid)

    h_derivs = _derivatives_at_zero(data.h, grid.dt, order + 1, n_points)
    f_derivs = (
        _derivatives_at_zero(data.f, grid.dt, max(order - 2, 0), n_points)
        if data.f is not None and order >= 3
        else None
    )

    u_derivs = [data.u0, data.u1, data.u2]
    for k in range(3, order + 1):
        nxt = (
            -coeff.alpha * u_derivs[k - 1]
            + coeff.b * smooth_laplacian(u_derivs[k - 2], grid)
            + coeff.c**2 * smooth_laplacian(u_derivs[k - 3], grid)
        )
        if f_derivs is not None:
            nxt = nxt + f_derivs[k - 3]
        u_derivs.append(nxt)

    residuals = []
    for k in range(order + 1):
        trace = grid.boundary_values(u_derivs[k])
        residuals.append(float(np.max(np.abs(trace - h_derivs[k]), initial=0.0)))
    return CompatibilityReport(order=order, residuals=residuals, tolerance=tolerance)


# ----------------------------------------------------------------------- norms


def l2_space(values: np.ndarray, grid: Grid) -> np.ndarray:
    """L2 norm over the domain per leading index."""
    return np.sqrt(integrate_space(np.abs(values) ** 2, grid).real)


def l2_q(values: np.ndarray, grid: Grid) -> float:
    """L2 norm over the space-time cylinder."""
    per_level = integrate_space(np.abs(values) ** 2, grid).real
    return float(np.sqrt(integrate_time(per_level, grid.dt)))


def _h_norm(values: np.ndarray, grid: Grid, order: int) -> np.ndarray:
    total = integrate_space(np.abs(values) ** 2, grid).real
    if order >= 1:
        gx, gy = smooth_gradient(values, grid)
        total = total + integrate_space(np.abs(gx) ** 2 + np.abs(gy) ** 2, grid).real
    if order >= 2:
        gxx, gxy, gyy = smooth_hessian(values, grid)
        total = total + integrate_space(
            np.abs(gxx) ** 2 + 2.0 * np.abs(gxy) ** 2 + np.abs(gyy) ** 2, grid
        ).real
    return np.sqrt(total)


def discrete_norms(field, grid: Grid, kind: NormKind | str, t_index: int = -1, m: int = 2) -> float:
    """
    Trapezoidal-quadrature norms of a field.

    Args:
        field: Solution, SpaceTimeField or (nt + 1, nx, ny) array
        grid: Owning grid
        kind: One of ``NormKind``
        t_index: Time level for the at-time norms
        m: Order of the E^m surrogate (0, 1 or 2)

    Returns:
        The norm; E^m is sup_t sum_k ||d_t^k u||_{H^(m-k)}
    """
    try:
        kind = NormKind(kind)
    except ValueError as exc:
        raise ArgumentError(f"unsupported norm kind: {kind!r}") from exc

    if isinstance(field, Solution):
        values = field.u
        companions = [field.u, field.u_t, field.u_tt]
    else:
        values = _values(field)
        companions = None
    grid.check_field(values, "field")

    if kind == NormKind.L2_Q:
        return l2_q(values, grid)
    if kind == NormKind.L2_OMEGA_AT_T:
        return float(_h_norm(values[t_index], grid, 0))
    if kind == NormKind.H1_OMEGA_AT_T:
        return float(_h_norm(values[t_index], grid, 1))

    if not 0 <= m <= 2:
        raise ArgumentError(f"E^m surrogate supports m <= 2, got m={m}")
    if companions is None:
        companions = [values]
        for _ in range(m):
            companions.append(time_derivative(companions[-1], grid.dt))
    total = sum(_h_norm(companions[k], grid, m - k) for k in range(m + 1))
    return float(np.max(total))


def boundary_l2(trace: np.ndarray, grid: Grid) -> float:
    """L2 norm over the lateral boundary Sigma with arc-length weights."""
    per_level = integrate_boundary(np.abs(trace) ** 2, grid)
    return float(np.sqrt(integrate_time(per_level, grid.dt)))


def data_norm(data: DataTuple, grid: Grid) -> float:
    """(|u0|_H2^2 + |u1|_H1^2 + |u2|_L2^2 + |f|_L2(Q)^2 + |h|_L2(Sigma)^2)^(1/2)."""
    total = (
        float(_h_norm(data.u0, grid, 2)) ** 2
        + float(_h_norm(data.u1, grid, 1)) ** 2
        + float(_h_norm(data.u2, grid, 0)) ** 2
        + boundary_l2(data.h, grid) ** 2
    )
    if data.f is not None:
        total += l2_q(data.f, grid) ** 2
    return float(np.sqrt(total))
