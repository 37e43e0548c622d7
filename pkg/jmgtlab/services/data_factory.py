"""Named data families for forward runs, convergence studies and tests."""

import numpy as np

from jmgtlab.errors import ArgumentError
from jmgtlab.models.coefficients import Coefficients
from jmgtlab.models.fields import DataTuple, Solution
from jmgtlab.models.grid import DomainShape, Grid


def zero_data(grid: Grid) -> DataTuple:
    return DataTuple.zeros(grid)


def constant_data(grid: Grid, amplitude: float = 1.0) -> DataTuple:
    """u = amplitude solves P u = 0."""
    data = DataTuple.zeros(grid)
    data.h[:] = amplitude
    data.u0[:] = amplitude
    return data


def quadratic_data(grid: Grid, coeff: Coefficients, amplitude: float = 1.0) -> DataTuple:
    """Data of u = amplitude * t^2, for which P u = 2 alpha amplitude."""
    t = grid.times
    data = DataTuple.zeros(grid)
    data.h = np.repeat((amplitude * t**2)[:, None], grid.n_boundary, axis=1).astype(complex)
    data.u2[:] = 2.0 * amplitude
    data.f = np.full(grid.field_shape, 2.0 * coeff.alpha * amplitude, dtype=complex)
    return data


def manufactured(
    grid: Grid,
    coeff: Coefficients,
    amplitude: float = 1.0,
    omega: float = 2.0 * np.pi,
    kx: float = np.pi,
    ky: float = np.pi,
) -> tuple[DataTuple, Solution]:
    """
    Data and exact solution for u* = A cos(omega t) sin(kx (x - x0)) sin(ky (y - y0)).

    The forcing is f = P u* evaluated in closed form.
    """
    xx, yy = grid.mesh()
    spatial = np.sin(kx * (xx - grid.x[0])) * np.sin(ky * (yy - grid.y[0]))
    k2 = kx**2 + ky**2
    t = grid.times[:, None, None]
    cos, sin = np.cos(omega * t), np.sin(omega * t)

    u = amplitude * cos * spatial
    u_t = -amplitude * omega * sin * spatial
    u_tt = -amplitude * omega**2 * cos * spatial
    u_ttt = amplitude * omega**3 * sin * spatial
    # Lap u* = -k2 u*
    f = u_ttt + coeff.alpha * u_tt + coeff.b * k2 * u_t + coeff.c**2 * k2 * u

    inside = grid.inside
    data = DataTuple(
        h=grid.boundary_values(u),
        u0=u[0] * inside,
        u1=u_t[0] * inside,
        u2=u_tt[0] * inside,
        f=f,
    )
    exact = Solution(u * inside, u_t * inside, u_tt * inside, grid.dt)
    return data, exact


def time_pulse(t: np.ndarray, t_on: float, t_off: float) -> np.ndarray:
    """sin^4 pulse on (t_on, t_off), zero elsewhere; C^3 at both ends."""
    active = (t > t_on) & (t < t_off)
    phase = np.pi * (t - t_on) / (t_off - t_on)
    return np.where(active, np.sin(phase) ** 4, 0.0)


def boundary_pulse(
    grid: Grid,
    amplitude: float = 1.0,
    t_on: float = 0.0,
    t_off: float | None = None,
    angular_mode: int = 1,
) -> DataTuple:
    """
    Zero initial data and a smooth boundary pulse.

    h(x, t) = A pulse(t) (1 + cos(m theta_x) / 2), theta_x being the angle of the
    boundary node about the domain centre. Compatible to order 3 at t = 0.
    """
    t_off = grid.t_final if t_off is None else t_off
    xx, yy = grid.mesh()
    bx = grid.boundary_values(xx) - grid.center[0]
    by = grid.boundary_values(yy) - grid.center[1]
    angular = 1.0 + 0.5 * np.cos(angular_mode * np.arctan2(by, bx))
    data = DataTuple.zeros(grid)
    data.h = amplitude * time_pulse(grid.times, t_on, t_off)[:, None] * angular[None, :]
    data.h = data.h.astype(complex)
    return data


def random_compatible_data(
    grid: Grid,
    rng: np.random.Generator,
    n_modes: int = 3,
    base_weight: float = 1.0,
    noise_weight: float = 0.3,
) -> DataTuple:
    """
    Homogeneous boundary data with random smooth initial triple and source.

    Every field is a fixed low mode plus a random combination of sine modes that
    vanish on the rectangle boundary, so the data are compatible to order 2.
    """
    if grid.shape != DomainShape.RECTANGLE:
        raise ArgumentError("random compatible data are built from rectangle sine modes")
    xx, yy = grid.mesh()
    lx, ly = grid.x[-1] - grid.x[0], grid.y[-1] - grid.y[0]

    def mode(i, j):
        return np.sin(i * np.pi * (xx - grid.x[0]) / lx) * np.sin(j * np.pi * (yy - grid.y[0]) / ly)

    def field():
        values = base_weight * mode(1, 1)
        coefs = rng.standard_normal((n_modes, n_modes))
        for i in range(n_modes):
            for j in range(n_modes):
                values = values + noise_weight * coefs[i, j] * mode(i + 1, j + 1) / (i + j + 2)
        return values

    t = grid.times[:, None, None]
    f = field()[None] * np.cos(np.pi * t / grid.t_final)
    h = np.zeros((grid.nt + 1, grid.n_boundary))
    return DataTuple(h=h, u0=field(), u1=field(), u2=field(), f=f)
