"""Experiment configuration sections and run manifests."""

from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from jmgtlab.config import settings
from jmgtlab.models.coefficients import Coefficients
from jmgtlab.models.fields import DataFamily
from jmgtlab.models.grid import DomainShape
from jmgtlab.models.measurement import MeasurementMode


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridSection(_Section):
    shape: DomainShape = DomainShape.RECTANGLE
    x_range: tuple[float, float] = (-0.25, 0.25)
    y_range: tuple[float, float] = (-0.25, 0.25)
    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 0.25
    nx: int = Field(32, ge=3)
    ny: int = Field(32, ge=3)
    t_final: float = Field(1.0, gt=0.0)
    nt: int = Field(64, ge=2)

    @model_validator(mode="after")
    def _ranges_increase(self) -> "GridSection":
        for name in ("x_range", "y_range"):
            lo, hi = getattr(self, name)
            if not hi > lo:
                raise ValueError(f"{name} must increase, got ({lo}, {hi})")
        return self


class DataSection(_Section):
    family: DataFamily = DataFamily.ZERO
    amplitude: float = 1.0
    omega: float = 6.283185307179586
    kx: float | None = None
    ky: float | None = None
    delta: float | None = None
    t_on: float = 0.0
    t_off: float | None = None
    angular_mode: int = 1
    refinements: int = Field(0, ge=0, le=4)


class NonlinearitySection(_Section):
    family: Literal["zero", "constant", "gaussian_bump", "file"] = "zero"
    center: tuple[float, float] = (0.0, 0.0)
    width: float = Field(0.1, gt=0.0)
    amplitude: float = 1.0
    time_window: tuple[float, float] | None = None
    path: Path | None = None

    @model_validator(mode="after")
    def _file_needs_path(self) -> "NonlinearitySection":
        if self.family == "file" and self.path is None:
            raise ValueError("family 'file' needs a path to a .npy array")
        return self


class ProbeSection(_Section):
    sigmas: list[float] = Field(default_factory=lambda: [10.0, 20.0, 40.0])
    mu: float = Field(1.0, ge=0.0)
    cutoff: bool = False
    profile: Literal["constant", "von_mises"] = "constant"
    profile_center: float | None = None
    profile_width: float = Field(0.5, gt=0.0)
    sign: Literal[1, -1] = 1
    scale: float = Field(1.0, gt=0.0)
    pad: float = Field(0.1, gt=0.0)
    source_index: int = 0
    n_sources: int = Field(16, ge=1)
    q: tuple[float, float] | None = None

    @field_validator("sigmas")
    @classmethod
    def _positive(cls, values: list[float]) -> list[float]:
        if any(s <= 0.0 for s in values):
            raise ValueError("sigmas must be positive")
        return sorted(values)


class LinearizeSection(_Section):
    eps1: float = 1e-3
    eps2: float = 1e-3
    eps_sweep: list[float] = Field(default_factory=lambda: [4e-3, 2e-3, 1e-3])
    method: Literal["direct", "cross_difference"] = "direct"


class ReconSection(_Section):
    mode: MeasurementMode = MeasurementMode.LAMBDA_T
    mus: list[float] = Field(default_factory=lambda: [0.5, 1.0, 2.0, 4.0])
    n_profiles: int = Field(4, ge=1)
    profile_kind: Literal["constant", "von_mises", "ray"] = "von_mises"
    n_sources: int = Field(8, ge=1)
    basis_shape: tuple[int, int, int] = (8, 8, 8)
    n_r: int = Field(32, ge=2)
    n_t: int = Field(32, ge=2)
    lam: float = Field(1e-6, ge=0.0)
    regularization_order: Literal[0, 1] = 0
    lcurve: bool = False
    method: Literal["tikhonov", "two_stage"] = "tikhonov"
    noise_level: float = Field(0.0, ge=0.0)
    richardson_order: float = Field(1.0, gt=0.0)
    linearization: Literal["direct", "cross_difference"] = "direct"
    simulate: bool = True

    @field_validator("basis_shape")
    @classmethod
    def _basis_at_least_two(cls, shape: tuple[int, int, int]) -> tuple[int, int, int]:
        if min(shape) < 2:
            raise ValueError("every basis axis needs at least two nodes")
        return shape


class RunSection(_Section):
    seed: int = 0
    output_dir: Path | None = None
    threads: int | None = Field(None, ge=1)


class ExperimentConfig(_Section):
    """Validated experiment file; ``coefficients`` and ``grid`` are required."""

    coefficients: Coefficients
    grid: GridSection
    data: DataSection = DataSection()
    nonlinearity: NonlinearitySection = NonlinearitySection()
    probe: ProbeSection = ProbeSection()
    linearize: LinearizeSection = LinearizeSection()
    recon: ReconSection = ReconSection()
    run: RunSection = RunSection()

    @property
    def threads(self) -> int | None:
        return self.run.threads if self.run.threads is not None else settings.threads


class TaskRecord(BaseModel):
    """One scheduled task in a run manifest."""

    name: str
    status: Literal["ok", "failed"] = "ok"
    seconds: float = 0.0
    error: str | None = None


class RunManifest(BaseModel):
    """Config hash, tool version, task log and every written file."""

    command: str
    config_hash: str
    version: str
    seed: int = 0
    tasks: list[TaskRecord] = Field(default_factory=list)
    files: list[str] = Field(default_factory=list)
