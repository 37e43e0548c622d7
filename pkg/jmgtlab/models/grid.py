"""Space-time grid: uniform tensor grid with a rectangle or embedded-disc domain."""

from dataclasses import dataclass, field
from enum import Enum, IntEnum

import numpy as np

from jmgtlab.errors import GeometryError, ShapeError


class DomainShape(str, Enum):
    """Supported spatial domains."""

    RECTANGLE = "rectangle"
    DISC = "disc"


class NodeKind(IntEnum):
    """Per-node flag stored in ``Grid.domain_mask``."""

    EXTERIOR = 0
    INTERIOR = 1
    BOUNDARY = 2


@dataclass(frozen=True, eq=False)
class Grid:
    """
    Uniform grid on [x0, x1] x [y0, y1] x [0, T].

    Node (i, j) sits at (x[i], y[j]); fields are stored as arrays of shape
    (nt + 1, nx, ny). Boundary nodes carry an outward unit normal and an
    arc-length weight; ``boundary_index`` lists them in flat (C-order) indices.
    """

    shape: DomainShape
    x: np.ndarray
    y: np.ndarray
    nt: int
    dt: float
    domain_mask: np.ndarray
    boundary_index: np.ndarray
    boundary_normals: np.ndarray
    boundary_weights: np.ndarray
    center: tuple[float, float] = (0.0, 0.0)
    radius: float | None = None
    _quadrature: np.ndarray | None = field(default=None, repr=False)

    # ------------------------------------------------------------------ builders

    @classmethod
    def rectangle(
        cls,
        x_range: tuple[float, float],
        y_range: tuple[float, float],
        nx: int,
        ny: int,
        t_final: float,
        nt: int,
    ) -> "Grid":
        """Rectangle domain; every box node is inside, the outer ring is the boundary."""
        x, y, dt = _axes(x_range, y_range, nx, ny, t_final, nt)

        mask = np.full((nx, ny), NodeKind.INTERIOR, dtype=np.int8)
        mask[0, :] = mask[-1, :] = NodeKind.BOUNDARY
        mask[:, 0] = mask[:, -1] = NodeKind.BOUNDARY

        ii, jj = np.nonzero(mask == NodeKind.BOUNDARY)
        normals = np.zeros((ii.size, 2))
        normals[:, 0] = np.where(ii == 0, -1.0, np.where(ii == nx - 1, 1.0, 0.0))
        normals[:, 1] = np.where(jj == 0, -1.0, np.where(jj == ny - 1, 1.0, 0.0))
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)

        hx, hy = x[1] - x[0], y[1] - y[0]
        # Each boundary node owns half of each adjacent boundary segment
        on_x_edge = (ii == 0) | (ii == nx - 1)
        on_y_edge = (jj == 0) | (jj == ny - 1)
        weights = np.zeros(ii.size)
        weights += np.where(on_x_edge, np.where(on_y_edge, 0.5 * hy, hy), 0.0)
        weights += np.where(on_y_edge, np.where(on_x_edge, 0.5 * hx, hx), 0.0)

        center = (0.5 * (x[0] + x[-1]), 0.5 * (y[0] + y[-1]))
        return cls(
            shape=DomainShape.RECTANGLE,
            x=x,
            y=y,
            nt=nt,
            dt=dt,
            domain_mask=mask,
            boundary_index=np.ravel_multi_index((ii, jj), (nx, ny)),
            boundary_normals=normals,
            boundary_weights=weights,
            center=center,
        )

    @classmethod
    def disc(
        cls,
        center: tuple[float, float],
        radius: float,
        nx: int,
        ny: int,
        t_final: float,
        nt: int,
        margin: float = 0.1,
    ) -> "Grid":
        """
        Disc embedded in its bounding box (padded by ``margin * radius``).

        Boundary nodes are inside nodes with an outside 4-neighbour; the boundary
        geometry is first-order accurate.
        """
        half = radius * (1.0 + margin)
        x, y, dt = _axes(
            (center[0] - half, center[0] + half),
            (center[1] - half, center[1] + half),
            nx,
            ny,
            t_final,
            nt,
        )
        xx, yy = np.meshgrid(x, y, indexing="ij")
        inside = np.hypot(xx - center[0], yy - center[1]) <= radius

        padded = np.pad(inside, 1, constant_values=False)
        all_neighbours_inside = (
            padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
        )
        mask = np.full((nx, ny), NodeKind.EXTERIOR, dtype=np.int8)
        mask[inside] = NodeKind.BOUNDARY
        mask[inside & all_neighbours_inside] = NodeKind.INTERIOR

        ii, jj = np.nonzero(mask == NodeKind.BOUNDARY)
        offsets = np.stack([xx[ii, jj] - center[0], yy[ii, jj] - center[1]], axis=1)
        lengths = np.linalg.norm(offsets, axis=1, keepdims=True)
        if np.any(lengths == 0.0):
            raise GeometryError("disc boundary node at the centre has no normal")
        normals = offsets / lengths
        weights = np.full(ii.size, 2.0 * np.pi * radius / max(ii.size, 1))

        return cls(
            shape=DomainShape.DISC,
            x=x,
            y=y,
            nt=nt,
            dt=dt,
            domain_mask=mask,
            boundary_index=np.ravel_multi_index((ii, jj), (nx, ny)),
            boundary_normals=normals,
            boundary_weights=weights,
            center=center,
            radius=radius,
        )

    # ---------------------------------------------------------------- properties

    @property
    def nx(self) -> int:
        return self.x.size

    @property
    def ny(self) -> int:
        return self.y.size

    @property
    def hx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def hy(self) -> float:
        return float(self.y[1] - self.y[0])

    @property
    def t_final(self) -> float:
        return self.dt * self.nt

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.nt + 1)

    @property
    def n_nodes(self) -> int:
        return self.nx * self.ny

    @property
    def n_boundary(self) -> int:
        return self.boundary_index.size

    @property
    def field_shape(self) -> tuple[int, int, int]:
        return (self.nt + 1, self.nx, self.ny)

    @property
    def interior(self) -> np.ndarray:
        return self.domain_mask == NodeKind.INTERIOR

    @property
    def inside(self) -> np.ndarray:
        """Closed domain: interior plus boundary nodes."""
        return self.domain_mask != NodeKind.EXTERIOR

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    def quadrature_weights(self) -> np.ndarray:
        """Trapezoidal weights of the bounding box restricted to the closed domain."""
        if self._quadrature is None:
            wx = np.full(self.nx, self.hx)
            wx[[0, -1]] *= 0.5
            wy = np.full(self.ny, self.hy)
            wy[[0, -1]] *= 0.5
            weights = np.outer(wx, wy) * self.inside
            object.__setattr__(self, "_quadrature", weights)
        return self._quadrature

    @property
    def area(self) -> float:
        return float(self.quadrature_weights().sum())

    @property
    def diameter(self) -> float:
        if self.shape == DomainShape.DISC:
            return 2.0 * float(self.radius)
        return float(np.hypot(self.x[-1] - self.x[0], self.y[-1] - self.y[0]))

    def boundary_values(self, values: np.ndarray) -> np.ndarray:
        """Restrict (..., nx, ny) values to boundary nodes -> (..., n_boundary)."""
        flat = values.reshape(values.shape[:-2] + (self.n_nodes,))
        return flat[..., self.boundary_index]

    def check_field(self, values: np.ndarray, name: str = "field") -> None:
        if values.shape != self.field_shape:
            raise ShapeError(f"{name} has shape {values.shape}, grid expects {self.field_shape}")

    def check_trace(self, values: np.ndarray, name: str = "trace") -> None:
        expected = (self.nt + 1, self.n_boundary)
        if values.shape != expected:
            raise ShapeError(f"{name} has shape {values.shape}, grid expects {expected}")


def _axes(x_range, y_range, nx, ny, t_final, nt):
    if nx < 3 or ny < 3:
        raise ShapeError(f"grid needs at least 3 points per axis, got {nx}x{ny}")
    if nt < 1 or t_final <= 0:
        raise ShapeError(f"invalid time axis: nt={nt}, t_final={t_final}")
    x = np.linspace(x_range[0], x_range[1], nx)
    y = np.linspace(y_range[0], y_range[1], ny)
    return x, y, t_final / nt
