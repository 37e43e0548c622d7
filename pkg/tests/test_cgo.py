"""Geometric-optics probes: phase, amplitudes, expansion audit and remainders."""

import numpy as np
import pytest

from jmgtlab.errors import ArgumentError, GeometryError, ResolutionError
from jmgtlab.models.grid import Grid
from jmgtlab.models.probe import (
    AmplitudeSpec,
    AngularProfile,
    Cutoff,
    ProbeGeometry,
    ProfileKind,
)
from jmgtlab.services.cgo import (
    amplitude_a1,
    amplitude_a2,
    assemble_probe,
    check_resolution,
    decay_slope,
    eikonal_phase,
    eikonal_residual,
    integrate_characteristics,
    probe_solution,
    sigma_expansion_audit,
    sigma_sweep,
    transport_residual,
)
from jmgtlab.services.mgt_core import l2_q
from jmgtlab.services.stencils import time_derivative


@pytest.fixture
def geom(coeff, probe_grid):
    return ProbeGeometry.on_outer_circle(probe_grid, coeff, pad=0.1, index=0, n_sources=8)


@pytest.fixture
def spec(coeff):
    return AmplitudeSpec(mu=1.0, gamma=coeff.gamma)


class TestGeometry:
    def test_source_outside_domain(self, geom, probe_grid):
        assert np.hypot(*geom.q) > 0.5 * probe_grid.diameter

    def test_source_inside_is_rejected(self, coeff, probe_grid):
        with pytest.raises(GeometryError):
            ProbeGeometry.at((0.0, 0.0), probe_grid, coeff, pad=0.1)

    def test_travel_time_units(self, probe_grid):
        from jmgtlab.models.coefficients import Coefficients

        slow = Coefficients(alpha=5.0, b=4.0, c=2.0)
        geom = ProbeGeometry.on_outer_circle(probe_grid, slow, pad=0.1)
        assert geom.t_star == pytest.approx((probe_grid.diameter + 0.1) / 2.0)


class TestPhase:
    def test_eikonal_holds(self, geom, coeff, probe_grid):
        residual = eikonal_residual(eikonal_phase(geom, coeff, probe_grid), coeff, probe_grid)
        assert residual["analytic"] < 1e-12
        assert residual["discrete"] < 0.05


class TestCharacteristics:
    def test_pure_transport_shifts_initial_values(self):
        initial = np.arange(10.0)
        out = integrate_characteristics(
            np.zeros((4, 10)), initial, dt=0.1, transfer=np.ones(9)
        )
        assert out.shape == (4, 7)
        for n in range(4):
            np.testing.assert_allclose(out[n], initial[n : n + 7])

    def test_constant_source_integrates_exactly(self):
        out = integrate_characteristics(
            np.full((5, 12), 2.0), np.zeros(12), dt=0.25, transfer=np.ones(11)
        )
        np.testing.assert_allclose(out[:, 0], 2.0 * 0.25 * np.arange(5))

    def test_short_table(self):
        with pytest.raises(ArgumentError):
            integrate_characteristics(np.zeros((6, 4)), np.zeros(4), 0.1, np.ones(3))


class TestAmplitudes:
    def test_a1_solves_transport(self, spec, geom, coeff, probe_grid):
        a1 = amplitude_a1(spec, geom, probe_grid)
        phase = eikonal_phase(geom, coeff, probe_grid)
        zero = np.zeros(probe_grid.field_shape)
        assert transport_residual(a1, phase, coeff, probe_grid, source=zero) < 0.05

    def test_a2_starts_at_one_without_cutoff(self, spec, geom, coeff, probe_grid):
        a2 = amplitude_a2(spec, geom, coeff, probe_grid)
        np.testing.assert_allclose(a2.values[0][probe_grid.inside], 1.0, atol=1e-10)
        assert a2.transport_source is not None

    def test_a2_transport_residual_converges(self, spec, coeff):
        residuals = []
        for n_space, nt in ((33, 64), (65, 128)):
            grid = Grid.rectangle((-0.25, 0.25), (-0.25, 0.25), n_space, n_space, 1.0, nt)
            geom = ProbeGeometry.on_outer_circle(grid, coeff, pad=0.1, index=0, n_sources=8)
            a2 = amplitude_a2(spec, geom, coeff, grid)
            residuals.append(
                transport_residual(a2, eikonal_phase(geom, coeff, grid), coeff, grid)
            )
        assert residuals[1] <= residuals[0] / 2.0

    def test_cutoff_probe_has_zero_initial_data(self, coeff, probe_grid, geom):
        spec = AmplitudeSpec(mu=1.0, gamma=coeff.gamma, cutoff=Cutoff.for_geometry(geom))
        probe = assemble_probe(5.0, spec, geom, coeff, probe_grid)
        for values in (probe.induced_data.u0, probe.induced_data.u1, probe.induced_data.u2):
            assert not np.any(values)

    def test_von_mises_profile_peaks_at_center(self):
        profile = AngularProfile(ProfileKind.VON_MISES, center=0.3, width=0.2)
        theta = np.linspace(-1.0, 1.5, 101)
        assert theta[np.argmax(profile.value(theta))] == pytest.approx(0.3, abs=0.03)


class TestAssembly:
    def test_rejects_nonpositive_sigma(self, spec, geom, coeff, probe_grid):
        with pytest.raises(ArgumentError):
            assemble_probe(0.0, spec, geom, coeff, probe_grid)

    def test_rejects_ray_profile(self, coeff, geom, probe_grid):
        ray = AmplitudeSpec(mu=1.0, gamma=coeff.gamma, profile=AngularProfile(ProfileKind.RAY))
        with pytest.raises(ArgumentError):
            assemble_probe(5.0, ray, geom, coeff, probe_grid)

    def test_resolution_refusal_names_grid_sizes(self, coeff, probe_grid):
        with pytest.raises(ResolutionError) as info:
            check_resolution(400.0, coeff, probe_grid)
        assert info.value.required["nx"] > probe_grid.nx
        assert info.value.exit_code == 3

    def test_cutoff_pad_must_cover_three_steps(self, coeff):
        grid = Grid.rectangle((-0.25, 0.25), (-0.25, 0.25), 33, 33, 1.0, 16)
        geom = ProbeGeometry.on_outer_circle(grid, coeff, pad=0.1)
        spec = AmplitudeSpec(mu=1.0, gamma=coeff.gamma, cutoff=Cutoff.for_geometry(geom))
        with pytest.raises(ResolutionError):
            assemble_probe(1.0, spec, geom, coeff, grid)


class TestExpansionAudit:
    def test_leading_coefficients_vanish(self, spec, geom, coeff, probe_grid):
        probe = assemble_probe(10.0, spec, geom, coeff, probe_grid)
        audit = sigma_expansion_audit(probe, coeff, probe_grid)
        assert audit.sigma3 < 1e-8
        assert audit.sigma2 < audit.transport_tol
        assert "sigma3" not in audit.flags

    def test_wrong_phase_is_flagged(self, spec, geom, coeff, probe_grid):
        probe = assemble_probe(10.0, spec, geom, coeff, probe_grid)
        xx, _ = probe_grid.mesh()
        zeros = np.zeros_like(xx)
        wrong = probe.phase.perturbed(0.3 * xx, 0.3 + zeros, zeros, zeros)
        audit = sigma_expansion_audit(probe, coeff, probe_grid, phase=wrong)
        assert "sigma3" in audit.flags
        assert not audit.passed

    def test_first_order_coefficient_converges(self, spec, coeff):
        sizes = []
        for n_space, nt in ((33, 64), (65, 128)):
            grid = Grid.rectangle((-0.25, 0.25), (-0.25, 0.25), n_space, n_space, 1.0, nt)
            geom = ProbeGeometry.on_outer_circle(grid, coeff, pad=0.1, index=0, n_sources=8)
            probe = assemble_probe(10.0, spec, geom, coeff, grid)
            sizes.append(sigma_expansion_audit(probe, coeff, grid).sigma1)
        assert sizes[1] <= sizes[0] / 2.5


class TestSweep:
    def test_decay_slope_of_power_law(self):
        sigmas = np.array([10.0, 20.0, 40.0, 80.0])
        assert decay_slope(sigmas, 3.0 / sigmas) == pytest.approx(-1.0)

    def test_sweep_table(self, spec, geom, coeff, probe_grid):
        frame = sigma_sweep([5.0, 10.0], spec, geom, coeff, probe_grid)
        assert list(frame.columns) == ["sigma", "norm_R", "norm_Rt", "norm_gradR"]
        assert frame["sigma"].tolist() == [5.0, 10.0]
        assert np.all(np.isfinite(frame.to_numpy()))

    def test_remainder_decays_across_sweep(self, spec, coeff):
        grid = Grid.rectangle((-0.25, 0.25), (-0.25, 0.25), 65, 65, 1.0, 128)
        geom = ProbeGeometry.on_outer_circle(grid, coeff, pad=0.1, index=0, n_sources=16)
        frame = sigma_sweep([10.0, 20.0, 40.0, 80.0], spec, geom, coeff, grid)
        assert decay_slope(frame["sigma"], frame["norm_R"]) <= -0.8
        assert frame["norm_Rt"].max() <= 2.0 * frame["norm_Rt"].iloc[0]


class TestCorrectedField:
    def test_adds_remainder_to_ansatz(self, spec, geom, coeff, probe_grid):
        probe = assemble_probe(10.0, spec, geom, coeff, probe_grid)
        field = probe_solution(probe, coeff, probe_grid)
        assert probe.remainder is not None
        np.testing.assert_allclose(field.u, probe.ansatz.u + probe.remainder.u)

    def test_ansatz_derivatives_match_differences(self, spec, geom, coeff, probe_grid):
        probe = assemble_probe(5.0, spec, geom, coeff, probe_grid)
        ansatz = probe.ansatz
        differenced = time_derivative(ansatz.u, probe_grid.dt)
        inner = slice(2, -2)
        error = l2_q((differenced - ansatz.u_t)[inner], probe_grid)
        assert error / l2_q(ansatz.u_t[inner], probe_grid) < 0.05
