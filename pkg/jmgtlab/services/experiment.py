"""
Experiment files: loading, hashing, object builders and pre-solve validation.

Every check that can fail without solving runs in ``validate_experiment``, so
a command either refuses up front or computes.
"""

import hashlib
import json
import logging
import tomllib
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from jmgtlab.errors import ConfigError, HypothesisViolationError
from jmgtlab.models.coefficients import Coefficients
from jmgtlab.models.experiment import ExperimentConfig
from jmgtlab.models.fields import DataFamily, DataTuple, Solution
from jmgtlab.models.grid import DomainShape, Grid
from jmgtlab.models.measurement import MeasurementMode
from jmgtlab.models.nonlinearity import NonlinearityField
from jmgtlab.models.probe import AmplitudeSpec, AngularProfile, Cutoff, ProbeGeometry, ProfileKind
from jmgtlab.services import data_factory
from jmgtlab.services.cgo import check_resolution

logger = logging.getLogger(__name__)

MIN_SWEEP_SIGMAS = 3


def load_config(path: Path | str) -> ExperimentConfig:
    """
    Parse and validate a TOML experiment file.

    Raises:
        ConfigError: unreadable file, TOML syntax error or invalid section
    """
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(raw, source=str(path))


def parse_config(raw: dict, source: str = "<config>") -> ExperimentConfig:
    """Validate an already parsed mapping; errors name the offending section."""
    for section in ("coefficients", "grid"):
        if section not in raw:
            raise ConfigError(f"{source}: missing required section [{section}]")
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        first = exc.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        raise ConfigError(f"{source}: [{location}] {first['msg']}") from exc


def config_hash(config: ExperimentConfig) -> str:
    """sha256 of the canonical JSON of the validated config."""
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# -------------------------------------------------------------------- builders


def build_grid(config: ExperimentConfig, refinement: int = 0) -> Grid:
    """Grid of the [grid] section, optionally refined ``refinement`` times by two."""
    section = config.grid
    factor = 2**refinement
    nx = (section.nx - 1) * factor + 1
    ny = (section.ny - 1) * factor + 1
    nt = section.nt * factor
    if section.shape == DomainShape.DISC:
        return Grid.disc(section.center, section.radius, nx, ny, section.t_final, nt)
    return Grid.rectangle(section.x_range, section.y_range, nx, ny, section.t_final, nt)


def build_data(
    config: ExperimentConfig, grid: Grid, coeff: Coefficients
) -> tuple[DataTuple, Solution | None]:
    """Data of the [data] section and the exact solution when one is known."""
    section = config.data
    if section.family == DataFamily.ZERO:
        return data_factory.zero_data(grid), Solution.zeros(grid)
    if section.family == DataFamily.CONSTANT:
        return data_factory.constant_data(grid, section.amplitude), None
    if section.family == DataFamily.QUADRATIC:
        return data_factory.quadratic_data(grid, coeff, section.amplitude), None
    if section.family == DataFamily.MANUFACTURED:
        lx, ly = grid.x[-1] - grid.x[0], grid.y[-1] - grid.y[0]
        return data_factory.manufactured(
            grid,
            coeff,
            amplitude=section.amplitude,
            omega=section.omega,
            kx=section.kx if section.kx is not None else np.pi / lx,
            ky=section.ky if section.ky is not None else np.pi / ly,
        )
    return (
        data_factory.boundary_pulse(
            grid, section.amplitude, section.t_on, section.t_off, section.angular_mode
        ),
        None,
    )


def build_nonlinearity(config: ExperimentConfig, grid: Grid) -> NonlinearityField:
    section = config.nonlinearity
    if section.family == "zero":
        return NonlinearityField.zero(grid)
    if section.family == "constant":
        return NonlinearityField.constant(grid, section.amplitude)
    if section.family == "gaussian_bump":
        return NonlinearityField.gaussian_bump(
            grid, section.center, section.width, section.amplitude, section.time_window
        )
    try:
        values = np.load(section.path)
    except OSError as exc:
        raise ConfigError(f"[nonlinearity] cannot read {section.path}: {exc}") from exc
    return NonlinearityField.from_samples(values, grid, support_window=section.time_window)


def build_geometry(
    config: ExperimentConfig, grid: Grid, coeff: Coefficients, index: int | None = None
) -> ProbeGeometry:
    section = config.probe
    if section.q is not None and index is None:
        return ProbeGeometry.at(section.q, grid, coeff, section.pad)
    index = section.source_index if index is None else index
    return ProbeGeometry.on_outer_circle(grid, coeff, section.pad, index, section.n_sources)


def build_amplitude_spec(
    config: ExperimentConfig, geom: ProbeGeometry, coeff: Coefficients, mu: float | None = None
) -> AmplitudeSpec:
    section = config.probe
    if section.profile == "von_mises":
        center = geom.theta_center if section.profile_center is None else section.profile_center
        profile = AngularProfile(ProfileKind.VON_MISES, center, section.profile_width)
    else:
        profile = AngularProfile()
    return AmplitudeSpec(
        mu=section.mu if mu is None else mu,
        gamma=coeff.gamma,
        profile=profile,
        cutoff=Cutoff.for_geometry(geom) if section.cutoff else None,
    )


# ------------------------------------------------------------------ validation


def validate_experiment(config: ExperimentConfig, command: str) -> list[str]:
    """
    Cross-section checks for ``command``; returns the list of checks that ran.

    Raises:
        ConfigError: sweep too short, inconsistent sections
        ResolutionError: a probe frequency is not resolved by the grid
        HypothesisViolationError: boundary-only reconstruction with early support
    """
    checks = []
    coeff = config.coefficients
    grid = build_grid(config)
    checks.append("grid")

    if command == "forward" and config.data.family == DataFamily.MANUFACTURED:
        if config.data.refinements and config.data.refinements < 2:
            raise ConfigError("[data] a convergence study needs refinements >= 2")
        checks.append("refinements")

    if command == "cgo-sweep":
        if len(config.probe.sigmas) < MIN_SWEEP_SIGMAS:
            raise ConfigError(
                f"[probe] sigmas needs at least {MIN_SWEEP_SIGMAS} values for a decay fit"
            )
        for sigma in config.probe.sigmas:
            check_resolution(config.probe.sign * config.probe.scale * sigma, coeff, grid)
        checks.append("resolution")

    if command == "linearize":
        if config.linearize.eps1 == 0.0 or config.linearize.eps2 == 0.0:
            raise ConfigError("[linearize] eps1 and eps2 must be nonzero")
        checks.append("epsilon")

    if command == "reconstruct":
        if len(config.probe.sigmas) < 2:
            raise ConfigError("[probe] reconstruction needs at least two sigmas")
        if config.recon.simulate:
            if config.recon.profile_kind == "ray":
                raise ConfigError(
                    "[recon] ray profiles are not smooth; "
                    "simulated probes need constant or von_mises"
                )
            # w1 oscillates at twice the pairing frequency
            for sigma in config.probe.sigmas:
                check_resolution(2.0 * sigma, coeff, grid)
            checks.append("resolution")
        if config.recon.mode == MeasurementMode.B_T:
            _check_boundary_only(config, grid, coeff)
            checks.append("support")

    logger.info("validated %s: %s", command, ", ".join(checks))
    return checks


def _check_boundary_only(config: ExperimentConfig, grid: Grid, coeff: Coefficients) -> None:
    """supp p within (T* + 2 pad, T) and T beyond T* + 2 pad."""
    geom = ProbeGeometry.on_outer_circle(grid, coeff, config.probe.pad, 0, config.recon.n_sources)
    start = geom.t_star + 2.0 * geom.pad_time
    if grid.t_final <= start:
        raise HypothesisViolationError(
            f"final time {grid.t_final:.4g} must exceed T* + 2 pad = {start:.4g}"
        )
    window = config.nonlinearity.time_window
    if config.nonlinearity.family == "zero":
        return
    if window is None or window[0] < start:
        raise HypothesisViolationError(
            f"p must be supported in ({start:.4g}, {grid.t_final:.4g}) for boundary-only data, "
            f"got time window {window}"
        )
