"""Shared fixtures: coefficients, small grids and config files."""

import textwrap

import pytest

from jmgtlab.models.coefficients import Coefficients
from jmgtlab.models.grid import Grid

BASE_CONFIG = """
[coefficients]
alpha = 2.0
b = 1.0
c = 1.0

[grid]
x_range = [-0.25, 0.25]
y_range = [-0.25, 0.25]
nx = 17
ny = 17
t_final = 0.5
nt = 16
"""


@pytest.fixture
def coeff():
    """gamma = 1 > 0, beta = 1."""
    return Coefficients(alpha=2.0, b=1.0, c=1.0)


@pytest.fixture
def small_grid():
    return Grid.rectangle((-0.25, 0.25), (-0.25, 0.25), 17, 17, 0.5, 16)


@pytest.fixture
def probe_grid():
    """Resolves probe frequencies up to 40 with ten points per wavelength."""
    return Grid.rectangle((-0.25, 0.25), (-0.25, 0.25), 33, 33, 1.0, 64)


@pytest.fixture
def disc_grid():
    return Grid.disc((0.0, 0.0), 0.25, 21, 21, 0.5, 16)


@pytest.fixture
def write_config(tmp_path):
    """Write BASE_CONFIG plus extra TOML sections; returns the path."""

    def _write(extra: str = "", base: str = BASE_CONFIG, name: str = "experiment.toml"):
        path = tmp_path / name
        path.write_text(textwrap.dedent(base) + textwrap.dedent(extra), encoding="utf-8")
        return path

    return _write
