"""Discrete ray transform: assembly, forward map, inversion and recovery of p."""

import numpy as np
import pytest

from jmgtlab.errors import ArgumentError, HypothesisViolationError, RegularizationError
from jmgtlab.models.probe import ProbeGeometry
from jmgtlab.models.ray_system import BasisAxes, ReconstructedField
from jmgtlab.services.ray_transform import (
    build_ray_system,
    ray_forward,
    ray_invert,
    recover_p,
    sample_field,
    select_lambda_lcurve,
    tikhonov_solve,
)


def _system(coeff, grid, mode="lambda_T"):
    geometries = [
        ProbeGeometry.on_outer_circle(grid, coeff, pad=0.1, index=i, n_sources=4)
        for i in range(2)
    ]
    return build_ray_system(
        geometries,
        [0.5, 1.0, 2.0],
        grid,
        mode=mode,
        n_profiles=2,
        basis_shape=(4, 4, 4),
        n_r=8,
        n_t=8,
    )


@pytest.fixture
def system(coeff, small_grid):
    return _system(coeff, small_grid)


def _basis_field(system, coefficients):
    field = ReconstructedField(
        coefficients=coefficients,
        basis=system.basis,
        covered=np.ones(system.basis.size, dtype=bool),
        residual=0.0,
        lam=0.0,
    )
    return field.evaluate


class TestBasis:
    def test_trilinear_reproduces_linear_functions(self, small_grid):
        basis = BasisAxes.covering(small_grid, (4, 5, 3))
        tx, ty, tt = np.meshgrid(basis.x, basis.y, basis.t, indexing="ij")
        nodal = (tx + 2.0 * ty + 3.0 * tt).ravel()
        rng = np.random.default_rng(1)
        x = rng.uniform(basis.x[0], basis.x[-1], 20)
        y = rng.uniform(basis.y[0], basis.y[-1], 20)
        t = rng.uniform(0.0, small_grid.t_final, 20)
        values = basis.interpolation_matrix(x, y, t) @ nodal
        np.testing.assert_allclose(values, x + 2.0 * y + 3.0 * t, atol=1e-12)

    def test_points_outside_have_empty_rows(self, small_grid):
        basis = BasisAxes.covering(small_grid, (3, 3, 3))
        matrix = basis.interpolation_matrix([10.0], [0.0], [0.1])
        assert matrix.nnz == 0


class TestAssembly:
    def test_row_labels(self, system):
        assert system.n_rows == 2 * 2 * 3
        assert list(system.rows.columns) == ["q", "profile", "mu"]
        assert system.n_unknowns == 64
        assert system.covered().any()

    def test_negative_mu_is_rejected(self, coeff, small_grid):
        geom = ProbeGeometry.on_outer_circle(small_grid, coeff, pad=0.1)
        with pytest.raises(ArgumentError):
            build_ray_system([geom], [-1.0], small_grid)

    def test_matrix_matches_sampled_forward_map(self, system):
        coefficients = np.random.default_rng(2).standard_normal(system.n_unknowns)
        samples = sample_field(_basis_field(system, coefficients), system)
        np.testing.assert_allclose(
            ray_forward(samples, system), system.matrix @ coefficients, rtol=1e-10, atol=1e-12
        )

    def test_wrong_number_of_sources(self, system):
        with pytest.raises(ArgumentError):
            ray_forward([np.zeros(system.sources[0].shape)], system)

    def test_boundary_mode_needs_late_support(self, coeff, small_grid):
        system = _system(coeff, small_grid, mode="B_T")
        ones = sample_field(lambda x, y, t: np.ones(np.broadcast(x, y, t).shape), system)
        with pytest.raises(HypothesisViolationError):
            ray_forward(ones, system)


class TestTikhonov:
    def test_full_rank_recovers_solution(self):
        rng = np.random.default_rng(4)
        matrix = rng.standard_normal((20, 5))
        x = rng.standard_normal(5)
        solution, residual = tikhonov_solve(matrix, matrix @ x, 0.0)
        np.testing.assert_allclose(solution, x, atol=1e-10)
        assert residual < 1e-10

    def test_imaginary_part_does_not_bias_real_fit(self):
        rng = np.random.default_rng(8)
        matrix = rng.standard_normal((20, 5))
        x = rng.standard_normal(5)
        noise = rng.standard_normal(20)
        data = matrix @ x + 1j * noise
        solution, residual = tikhonov_solve(matrix, data, 0.0)
        np.testing.assert_allclose(solution, x, atol=1e-10)
        assert residual == pytest.approx(np.linalg.norm(noise) / np.linalg.norm(data))

    def test_row_space_solution_of_wide_system(self):
        rng = np.random.default_rng(9)
        matrix = rng.standard_normal((6, 40))
        x = matrix.T @ rng.standard_normal(6)
        solution, residual = tikhonov_solve(matrix, matrix @ x, 1e-12)
        np.testing.assert_allclose(solution, x, rtol=1e-6, atol=1e-8)
        assert residual < 1e-8

    def test_underdetermined_needs_regularization(self):
        with pytest.raises(RegularizationError):
            tikhonov_solve(np.ones((3, 5)), np.ones(3), 0.0)

    def test_small_lam_fits_consistent_data(self, system):
        coefficients = np.random.default_rng(5).standard_normal(system.n_unknowns)
        field = ray_invert(system.matrix @ coefficients, system, lam=1e-10)
        assert field.residual < 1e-3
        assert field.method == "tikhonov"

    def test_two_stage_runs(self, system):
        coefficients = np.random.default_rng(6).standard_normal(system.n_unknowns)
        field = ray_invert(system.matrix @ coefficients, system, lam=1e-6, method="two_stage")
        assert np.all(np.isfinite(field.coefficients))
        assert 0.0 < field.coverage_fraction <= 1.0

    def test_unknown_method(self, system):
        with pytest.raises(ArgumentError):
            ray_invert(np.zeros(system.n_rows), system, method="kaczmarz")

    def test_data_size_mismatch(self, system):
        with pytest.raises(ArgumentError):
            ray_invert(np.zeros(system.n_rows + 1), system)


class TestLCurve:
    def test_picks_an_interior_lam(self, system):
        coefficients = np.random.default_rng(7).standard_normal(system.n_unknowns)
        data = system.matrix @ coefficients
        lams = np.logspace(-8, 0, 9)
        lam, table = select_lambda_lcurve(data, system, lams)
        assert lam in lams[1:-1]
        assert list(table.columns) == ["lam", "residual_norm", "solution_norm", "curvature"]

    def test_needs_three_values(self, system):
        with pytest.raises(ArgumentError):
            select_lambda_lcurve(np.zeros(system.n_rows), system, [1e-3, 1e-2])


class TestRecoverP:
    def test_identity_without_damping(self):
        p_tilde = np.arange(12.0).reshape(3, 2, 2)
        p = recover_p(p_tilde, np.ones((2, 2)), 0.0, np.linspace(0.0, 1.0, 3))
        np.testing.assert_allclose(p.filled(np.nan), p_tilde)

    def test_growth_and_amplitude(self):
        times = np.array([0.0, 1.0])
        p = recover_p(np.ones((2, 3)), np.full(3, 2.0), 1.0, times)
        np.testing.assert_allclose(p[1], np.exp(1.0) / 2.0)

    def test_vanishing_amplitude(self):
        with pytest.raises(ArgumentError):
            recover_p(np.ones((2, 3)), np.zeros(3), 0.0, np.array([0.0, 1.0]))

    def test_uncovered_nodes_are_masked(self):
        coverage = np.array([[1.0, 0.5], [1.0, 1.0]])
        p = recover_p(np.ones((2, 2)), np.ones(2), 0.0, np.array([0.0, 1.0]), coverage)
        assert p.mask.tolist() == [[False, True], [False, False]]


class TestRoundTrip:
    def test_closed_form_for_unit_field(self, coeff, small_grid):
        geom = ProbeGeometry.on_outer_circle(small_grid, coeff, pad=0.1)
        mus = np.array([0.5, 1.0, 2.0, 4.0])
        system = build_ray_system(
            [geom], mus, small_grid, profile_kind="constant", n_r=32, n_t=32
        )
        ones = [np.ones(samples.shape) for samples in system.sources]
        near, far = geom.radial_range()
        t_final = small_grid.t_final
        expected = (
            geom.theta_span
            * (np.exp(-mus * near) - np.exp(-mus * far))
            / mus
            * (1.0 - np.exp(-mus * t_final))
            / mus
        )
        np.testing.assert_allclose(ray_forward(ones, system), expected, rtol=1e-2)

    def test_fine_basis_recovers_field(self, coeff, small_grid):
        geometries = [
            ProbeGeometry.on_outer_circle(small_grid, coeff, pad=0.1, index=i, n_sources=8)
            for i in range(8)
        ]
        system = build_ray_system(
            geometries,
            np.geomspace(0.25, 8.0, 8),
            small_grid,
            n_profiles=8,
            basis_shape=(16, 16, 32),
            n_r=32,
            n_t=64,
        )
        truth = system.matrix.T @ np.ones(system.n_rows)
        truth /= np.abs(truth).max()
        data = ray_forward(sample_field(_basis_field(system, truth), system), system)
        field = ray_invert(data, system, lam=1e-10, order=0)
        error = np.linalg.norm(field.coefficients - truth) / np.linalg.norm(truth)
        assert error <= 0.1
