"""Geometry, amplitude specs and assembled fields of high-frequency probes."""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from jmgtlab.errors import ArgumentError, GeometryError
from jmgtlab.models.coefficients import Coefficients
from jmgtlab.models.fields import DataTuple, Solution
from jmgtlab.models.grid import DomainShape, Grid


@dataclass(frozen=True, eq=False)
class ProbeGeometry:
    """
    Source point q on the boundary of the padded disc Omega_1.

    Omega_1 is concentric with the domain's bounding box and has diameter
    diam(Omega) + pad. Radii r and times are in travel-time units
    (Euclidean length / sqrt(b)); ``pad`` is a Euclidean length.
    """

    q: tuple[float, float]
    pad: float
    center: tuple[float, float]
    outer_radius: float
    domain_radius: float
    sqrt_b: float
    theta_samples: np.ndarray

    @classmethod
    def on_outer_circle(
        cls,
        grid: Grid,
        coeff: Coefficients,
        pad: float,
        index: int = 0,
        n_sources: int = 16,
        n_theta: int = 32,
    ) -> "ProbeGeometry":
        """Source ``index`` of ``n_sources`` spaced uniformly on the outer circle."""
        if pad <= 0.0:
            raise GeometryError(f"pad must be positive, got {pad}")
        domain_radius = 0.5 * grid.diameter
        outer_radius = domain_radius + 0.5 * pad
        angle = 2.0 * np.pi * index / n_sources
        q = (
            grid.center[0] + outer_radius * np.cos(angle),
            grid.center[1] + outer_radius * np.sin(angle),
        )
        return cls.at(q, grid, coeff, pad, n_theta=n_theta)

    @classmethod
    def at(
        cls,
        q: tuple[float, float],
        grid: Grid,
        coeff: Coefficients,
        pad: float,
        n_theta: int = 32,
    ) -> "ProbeGeometry":
        """Geometry for an explicit source point; q must lie outside the closed domain."""
        q = (float(q[0]), float(q[1]))
        if _inside_closure(q, grid):
            raise GeometryError(f"source point {q} lies in the closed domain")
        domain_radius = 0.5 * grid.diameter
        offset = np.hypot(q[0] - grid.center[0], q[1] - grid.center[1])
        if offset <= domain_radius:
            raise GeometryError(
                f"source point {q} lies inside the circumscribed disc of the domain"
            )
        toward_center = np.arctan2(grid.center[1] - q[1], grid.center[0] - q[0])
        half_cone = np.arcsin(min(domain_radius / offset, 1.0))
        edges = np.linspace(toward_center - half_cone, toward_center + half_cone, n_theta + 1)
        return cls(
            q=q,
            pad=float(pad),
            center=tuple(grid.center),
            outer_radius=float(offset),
            domain_radius=float(domain_radius),
            sqrt_b=float(np.sqrt(coeff.b)),
            theta_samples=0.5 * (edges[:-1] + edges[1:]),
        )

    @property
    def pad_time(self) -> float:
        return self.pad / self.sqrt_b

    @property
    def t_star(self) -> float:
        """diam(Omega) + pad in travel-time units."""
        return (2.0 * self.domain_radius + self.pad) / self.sqrt_b

    @property
    def theta_center(self) -> float:
        return float(np.arctan2(self.center[1] - self.q[1], self.center[0] - self.q[0]))

    @property
    def theta_span(self) -> float:
        return float(self.theta_samples[-1] - self.theta_samples[0]) * (
            len(self.theta_samples) / max(len(self.theta_samples) - 1, 1)
        )

    def exit_radius(self, theta: np.ndarray) -> np.ndarray:
        """Travel time from q to the far side of Omega_1 along direction theta."""
        direction = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        rel = np.array([self.q[0] - self.center[0], self.q[1] - self.center[1]])
        chord = -2.0 * direction @ rel
        return np.maximum(chord, 0.0) / self.sqrt_b

    def radial_range(self) -> tuple[float, float]:
        """Travel-time radii bracketing the circumscribed disc of the domain."""
        near = max(self.outer_radius - self.domain_radius, 1e-12)
        far = self.outer_radius + self.domain_radius
        return near / self.sqrt_b, far / self.sqrt_b

    def polar(self, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Travel-time radius and angle of points about q (radius floored away from 0)."""
        dx, dy = x - self.q[0], y - self.q[1]
        floor = 0.5 * (self.outer_radius - self.domain_radius) / self.sqrt_b
        r = np.maximum(np.hypot(dx, dy) / self.sqrt_b, floor)
        return r, np.arctan2(dy, dx)


def _inside_closure(q: tuple[float, float], grid: Grid) -> bool:
    if grid.shape == DomainShape.DISC:
        return np.hypot(q[0] - grid.center[0], q[1] - grid.center[1]) <= grid.radius
    return grid.x[0] <= q[0] <= grid.x[-1] and grid.y[0] <= q[1] <= grid.y[-1]


class ProfileKind(str, Enum):
    """Angular profile families."""

    CONSTANT = "constant"
    VON_MISES = "von_mises"
    RAY = "ray"


@dataclass(frozen=True)
class AngularProfile:
    """
    Angular weight Phi(theta) at the source point.

    von_mises: exp(kappa (cos(theta - center) - 1)) with kappa = 1 / width^2.
    ray: indicator of |theta - center| < width / 2 (row weights only, not smooth).
    """

    kind: ProfileKind = ProfileKind.CONSTANT
    center: float = 0.0
    width: float = 1.0

    def value(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if self.kind == ProfileKind.CONSTANT:
            return np.ones_like(theta)
        if self.kind == ProfileKind.VON_MISES:
            kappa = 1.0 / self.width**2
            return np.exp(kappa * (np.cos(theta - self.center) - 1.0))
        return (np.abs(_wrap(theta - self.center)) < 0.5 * self.width).astype(float)

    def second_derivative(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if self.kind == ProfileKind.CONSTANT:
            return np.zeros_like(theta)
        if self.kind == ProfileKind.VON_MISES:
            kappa = 1.0 / self.width**2
            d = theta - self.center
            return self.value(theta) * (kappa**2 * np.sin(d) ** 2 - kappa * np.cos(d))
        raise ArgumentError("ray profiles have no second derivative; use them for rows only")

    @property
    def smooth(self) -> bool:
        return self.kind != ProfileKind.RAY


def _wrap(angle: np.ndarray) -> np.ndarray:
    return (angle + np.pi) % (2.0 * np.pi) - np.pi


@dataclass(frozen=True)
class Cutoff:
    """Quintic smoothstep chi: 0 up to ``start``, 1 from ``end`` on (travel-time units)."""

    start: float
    end: float

    def __post_init__(self):
        if not self.end > self.start:
            raise ArgumentError(f"cutoff knots must increase, got ({self.start}, {self.end})")

    @classmethod
    def for_geometry(cls, geom: ProbeGeometry) -> "Cutoff":
        return cls(geom.t_star + geom.pad_time, geom.t_star + 2.0 * geom.pad_time)

    def _x(self, s):
        x = (np.asarray(s, dtype=float) - self.start) / (self.end - self.start)
        return np.clip(x, 0.0, 1.0)

    def value(self, s: np.ndarray) -> np.ndarray:
        x = self._x(s)
        return x**3 * (10.0 - 15.0 * x + 6.0 * x**2)

    def derivative(self, s: np.ndarray) -> np.ndarray:
        x = self._x(s)
        return 30.0 * x**2 * (1.0 - x) ** 2 / (self.end - self.start)

    def second_derivative(self, s: np.ndarray) -> np.ndarray:
        x = self._x(s)
        return 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x) / (self.end - self.start) ** 2


@dataclass(frozen=True)
class AmplitudeSpec:
    """
    Leading amplitude a1 = g(r + t) Phi(theta) exp(-gamma t / 2) d^{-1/4}.

    g(s) = exp(-mu s / 2) chi(s), with chi = 1 when no cutoff is set; d = r^2.
    """

    mu: float
    gamma: float
    profile: AngularProfile = AngularProfile()
    cutoff: Cutoff | None = None
    d_metric: str = "polar_euclidean"

    def __post_init__(self):
        if self.mu < 0.0:
            raise ArgumentError(f"mu must be non-negative, got {self.mu}")

    def envelope(self, s: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """g, g', g'' of the radial-temporal envelope at s = r + t."""
        s = np.asarray(s, dtype=float)
        decay = np.exp(-0.5 * self.mu * s)
        if self.cutoff is None:
            chi, chi_1, chi_2 = np.ones_like(s), np.zeros_like(s), np.zeros_like(s)
        else:
            chi = self.cutoff.value(s)
            chi_1 = self.cutoff.derivative(s)
            chi_2 = self.cutoff.second_derivative(s)
        g = decay * chi
        g_1 = decay * (chi_1 - 0.5 * self.mu * chi)
        g_2 = decay * (chi_2 - self.mu * chi_1 + 0.25 * self.mu**2 * chi)
        return g, g_1, g_2


@dataclass
class PhaseField:
    """Phase phi = |x - q| / sqrt(b) with analytic gradient and Laplacian."""

    values: np.ndarray
    grad_x: np.ndarray
    grad_y: np.ndarray
    laplacian: np.ndarray
    r: np.ndarray
    theta: np.ndarray

    def perturbed(self, values, grad_x, grad_y, laplacian) -> "PhaseField":
        """Phase plus an extra term given with its derivatives."""
        return PhaseField(
            self.values + values,
            self.grad_x + grad_x,
            self.grad_y + grad_y,
            self.laplacian + laplacian,
            self.r,
            self.theta,
        )

    def gradient_norm2(self) -> np.ndarray:
        return self.grad_x**2 + self.grad_y**2


@dataclass
class AmplitudeField:
    """Complex amplitude on the space-time grid, with the transport source it solves."""

    values: np.ndarray
    transport_source: np.ndarray | None = None

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    @property
    def source_sup_norm(self) -> float:
        if self.transport_source is None:
            return 0.0
        return float(np.max(np.abs(self.transport_source)))


@dataclass
class RemainderNorms:
    """L2(Q) norms of the remainder, its time derivative and its gradient."""

    sigma: float
    norm_r: float
    norm_rt: float
    norm_grad_r: float

    def to_dict(self) -> dict:
        return {
            "sigma": self.sigma,
            "norm_R": self.norm_r,
            "norm_Rt": self.norm_rt,
            "norm_gradR": self.norm_grad_r,
        }


@dataclass
class CGOProbe:
    """
    Probe exp(i w (phi + t)) (a1 + a2 / w) with w = sign * scale * sigma.

    ``induced_data`` is the boundary trace and initial triple of the ansatz;
    ``remainder`` is filled in by the remainder solve.
    """

    sigma: float
    sign: int
    scale: float
    geometry: ProbeGeometry
    spec: AmplitudeSpec
    phase: PhaseField
    a1: AmplitudeField
    a2: AmplitudeField
    induced_data: DataTuple
    ansatz: Solution
    remainder: Solution | None = None
    norms: RemainderNorms | None = None

    @property
    def omega(self) -> float:
        return self.sign * self.scale * self.sigma

    def solution(self) -> Solution:
        """Ansatz plus remainder; raises if the remainder has not been solved."""
        if self.remainder is None:
            raise ArgumentError("probe remainder has not been solved")
        return self.ansatz + self.remainder
