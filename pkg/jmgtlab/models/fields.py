"""Space-time fields, solver outputs and the data tuple of the linear problem."""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from jmgtlab.errors import DivergenceError, ShapeError
from jmgtlab.models.grid import Grid


class FieldRole(str, Enum):
    """What a stored field represents."""

    U = "u"
    U_T = "u_t"
    U_TT = "u_tt"
    SOURCE = "source"
    TRACE = "trace"


class DataFamily(str, Enum):
    """Data families selectable from the ``[data]`` config section."""

    ZERO = "zero"
    CONSTANT = "constant"
    QUADRATIC = "quadratic"
    MANUFACTURED = "manufactured"
    BOUNDARY_PULSE = "boundary_pulse"


@dataclass
class SpaceTimeField:
    """Complex values per (time level, node); traces use (time level, boundary node)."""

    values: np.ndarray
    role: FieldRole
    dt: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)

    def check_finite(self, step: int | None = None) -> None:
        if not np.all(np.isfinite(self.values)):
            raise DivergenceError(f"non-finite values in {self.role.value} field", step=step)

    def scaled(self, factor: complex) -> "SpaceTimeField":
        return SpaceTimeField(self.values * factor, self.role, self.dt)


@dataclass
class Solution:
    """A solved field u with its time-derivative companions u_t and u_tt."""

    u: np.ndarray
    u_t: np.ndarray
    u_tt: np.ndarray
    dt: float
    scheme: str = "trapezoidal"

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=complex)
        self.u_t = np.asarray(self.u_t, dtype=complex)
        self.u_tt = np.asarray(self.u_tt, dtype=complex)
        if not (self.u.shape == self.u_t.shape == self.u_tt.shape):
            raise ShapeError("solution companions must share the shape of u")

    @classmethod
    def zeros(cls, grid: Grid) -> "Solution":
        zero = np.zeros(grid.field_shape, dtype=complex)
        return cls(zero, zero.copy(), zero.copy(), grid.dt)

    def field(self, role: FieldRole = FieldRole.U) -> SpaceTimeField:
        values = {FieldRole.U: self.u, FieldRole.U_T: self.u_t, FieldRole.U_TT: self.u_tt}[role]
        return SpaceTimeField(values, role, self.dt)

    def __add__(self, other: "Solution") -> "Solution":
        return Solution(
            self.u + other.u, self.u_t + other.u_t, self.u_tt + other.u_tt, self.dt, self.scheme
        )

    def __sub__(self, other: "Solution") -> "Solution":
        return Solution(
            self.u - other.u, self.u_t - other.u_t, self.u_tt - other.u_tt, self.dt, self.scheme
        )

    def scaled(self, factor: complex) -> "Solution":
        return Solution(
            self.u * factor, self.u_t * factor, self.u_tt * factor, self.dt, self.scheme
        )

    def final_triple(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.u[-1], self.u_t[-1], self.u_tt[-1]


@dataclass
class DataTuple:
    """
    Data of the linear problem.

    h: Dirichlet trace, shape (nt + 1, n_boundary).
    u0, u1, u2: initial u, u_t, u_tt, shape (nx, ny).
    f: interior source, shape (nt + 1, nx, ny), or None for f = 0.
    """

    h: np.ndarray
    u0: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    f: np.ndarray | None = None

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=complex)
        self.u0 = np.asarray(self.u0, dtype=complex)
        self.u1 = np.asarray(self.u1, dtype=complex)
        self.u2 = np.asarray(self.u2, dtype=complex)
        if self.f is not None:
            self.f = np.asarray(self.f, dtype=complex)

    @classmethod
    def zeros(cls, grid: Grid) -> "DataTuple":
        initial = np.zeros((grid.nx, grid.ny), dtype=complex)
        return cls(
            h=np.zeros((grid.nt + 1, grid.n_boundary), dtype=complex),
            u0=initial,
            u1=initial.copy(),
            u2=initial.copy(),
        )

    @classmethod
    def source_only(cls, f: np.ndarray, grid: Grid) -> "DataTuple":
        data = cls.zeros(grid)
        data.f = np.asarray(f, dtype=complex)
        return data

    def validate(self, grid: Grid) -> None:
        grid.check_trace(self.h, "h")
        for name in ("u0", "u1", "u2"):
            if getattr(self, name).shape != (grid.nx, grid.ny):
                raise ShapeError(f"{name} has shape {getattr(self, name).shape}")
        if self.f is not None:
            grid.check_field(self.f, "f")

    def source(self, grid: Grid) -> np.ndarray:
        if self.f is None:
            return np.zeros(grid.field_shape, dtype=complex)
        return self.f

    def combine(self, other: "DataTuple", a: complex = 1.0, b: complex = 1.0) -> "DataTuple":
        """Linear combination a * self + b * other."""
        if self.f is None and other.f is None:
            f = None
        else:
            f = a * (self.f if self.f is not None else 0.0) + b * (
                other.f if other.f is not None else 0.0
            )
        return DataTuple(
            h=a * self.h + b * other.h,
            u0=a * self.u0 + b * other.u0,
            u1=a * self.u1 + b * other.u1,
            u2=a * self.u2 + b * other.u2,
            f=f,
        )

    def scaled(self, factor: complex) -> "DataTuple":
        return DataTuple(
            h=factor * self.h,
            u0=factor * self.u0,
            u1=factor * self.u1,
            u2=factor * self.u2,
            f=None if self.f is None else factor * self.f,
        )

    def is_real(self) -> bool:
        parts = [self.h, self.u0, self.u1, self.u2] + ([self.f] if self.f is not None else [])
        return all(np.all(part.imag == 0.0) for part in parts)
