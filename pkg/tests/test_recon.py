"""Adjoint probes, measurement records and the integral identity."""

import numpy as np
import pandas as pd
import pytest

from jmgtlab.errors import ArgumentError, DataError
from jmgtlab.models.fields import Solution
from jmgtlab.models.grid import Grid
from jmgtlab.models.linearization import EpsilonDesign
from jmgtlab.models.measurement import MeasurementMode, MeasurementRecord
from jmgtlab.models.nonlinearity import NonlinearityField
from jmgtlab.models.probe import AngularProfile, ProbeGeometry
from jmgtlab.services import data_factory
from jmgtlab.services.linearize import linearize_pair
from jmgtlab.services.pipeline import extract_ray_data, simulate_measurement
from jmgtlab.services.recon import (
    adjoint_amplitude,
    build_adjoint_probe,
    identity_lhs,
    identity_rhs,
    measurement_sample,
    record_measurement,
    space_time_pairing,
)


@pytest.fixture
def geom(coeff, probe_grid):
    return ProbeGeometry.on_outer_circle(probe_grid, coeff, pad=0.1, index=2, n_sources=8)


class TestAdjointProbe:
    def test_amplitude_grows_with_gamma(self, geom, coeff, probe_grid):
        a0 = adjoint_amplitude(geom, coeff, probe_grid)
        ratio = a0[-1] / a0[0]
        np.testing.assert_allclose(ratio, np.exp(0.5 * coeff.gamma * probe_grid.t_final))

    def test_remainder_has_zero_data(self, geom, coeff, probe_grid):
        probe = build_adjoint_probe(10.0, geom, coeff, probe_grid)
        assert not np.any(probe.r0.u[0])
        assert not np.any(probe_grid.boundary_values(probe.r0.u))
        assert probe.residual < 1.0


class TestMeasurement:
    def test_record_shapes(self, coeff, small_grid):
        w = Solution.zeros(small_grid)
        record = record_measurement(w, small_grid, "B_T", sigma=5.0)
        assert record.mode == MeasurementMode.B_T
        assert record.dtn_trace.shape == (small_grid.nt + 1, small_grid.n_boundary)
        record.validate(small_grid)

    def test_missing_trace(self, coeff, small_grid):
        record = MeasurementRecord(None, None, MeasurementMode.LAMBDA_T, 1.0)
        with pytest.raises(DataError):
            identity_rhs(Solution.zeros(small_grid), record, coeff, small_grid)

    def test_rhs_needs_time_derivatives(self, coeff, small_grid):
        record = record_measurement(Solution.zeros(small_grid), small_grid)
        with pytest.raises(DataError):
            identity_rhs(np.zeros(small_grid.field_shape), record, coeff, small_grid)

    def test_pairing_is_bilinear(self, small_grid):
        rng = np.random.default_rng(0)
        a = rng.standard_normal(small_grid.field_shape)
        b = rng.standard_normal(small_grid.field_shape)
        assert space_time_pairing(2j * a, b, small_grid) == pytest.approx(
            2j * space_time_pairing(a, b, small_grid)
        )

    def test_normalized_sample(self):
        assert measurement_sample(-8.0 + 2.0j, 2.0) == pytest.approx(1.0 - 0.25j)


class TestIntegralIdentity:
    @staticmethod
    def _gap(coeff, n_space, nt):
        # y = exp(gamma t) solves the adjoint equation exactly
        grid = Grid.rectangle((-0.25, 0.25), (-0.25, 0.25), n_space, n_space, 1.0, nt)
        p = NonlinearityField.gaussian_bump(grid, (0.0, 0.0), 0.1, 1.0, (0.1, 0.9))
        design = EpsilonDesign(
            data_factory.boundary_pulse(grid, 1.0, 0.0, 0.5, angular_mode=1),
            data_factory.boundary_pulse(grid, 1.0, 0.0, 0.5, angular_mode=2),
        )
        pair = linearize_pair(design, p, coeff, grid)
        gamma = coeff.gamma
        growth = np.exp(gamma * grid.times)[:, None, None] * np.ones(grid.field_shape)
        y = Solution(growth, gamma * growth, gamma**2 * growth, grid.dt)
        record = record_measurement(pair.w, grid)
        lhs = identity_lhs(y, p, pair.w1, pair.w2, grid, coeff=coeff, w=pair.w)
        rhs = identity_rhs(y, record, coeff, grid)
        return abs(lhs - rhs) / max(abs(lhs), abs(rhs))

    def test_gap_shrinks_under_refinement(self, coeff):
        coarse = self._gap(coeff, 33, 64)
        fine = self._gap(coeff, 65, 128)
        assert fine <= coarse / 4.0

    def test_zero_p_gives_zero_sample(self, coeff, probe_grid, geom):
        row = simulate_measurement(
            5.0,
            geom,
            1.0,
            AngularProfile(),
            NonlinearityField.zero(probe_grid),
            coeff,
            probe_grid,
        )
        assert row["real"] == 0.0 and row["imag"] == 0.0


class TestExtractRayData:
    def _samples(self, values):
        rows = []
        for sigma, value in values:
            rows.append(
                {"q": 0, "profile": 0, "mu": 1.0, "sigma": sigma, "real": value, "imag": 0.0}
            )
        return pd.DataFrame(rows)

    def test_richardson_removes_first_order_term(self):
        samples = self._samples([(s, 2.0 + 3.0 / s) for s in (10.0, 20.0, 40.0)])
        table = extract_ray_data(samples, order=1.0)
        assert table.loc[0, "real"] == pytest.approx(2.0)
        assert table.loc[0, "n_sigma"] == 3
        assert table.loc[0, "error_bar"] == pytest.approx(3.0 / 20.0 - 3.0 / 40.0)

    def test_growing_spread_warns(self, caplog):
        samples = self._samples([(10.0, 1.0), (20.0, 1.1), (40.0, 1.5)])
        extract_ray_data(samples)
        assert "asymptotic regime not reached" in caplog.text

    def test_single_sigma_is_rejected(self):
        with pytest.raises(ArgumentError):
            extract_ray_data(self._samples([(10.0, 1.0)]))
