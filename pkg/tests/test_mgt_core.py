"""Linear MGT solver, operators, norms and compatibility checks."""

import numpy as np
import pytest

from jmgtlab.config import settings
from jmgtlab.errors import ArgumentError, InsufficientDataError
from jmgtlab.models.coefficients import Coefficients
from jmgtlab.models.fields import DataTuple
from jmgtlab.models.grid import Grid
from jmgtlab.services import data_factory
from jmgtlab.services.mgt_core import (
    DampedWaveSolver,
    MGTSolver,
    NormKind,
    Scheme,
    apply_P,
    apply_P_factorized,
    boundary_l2,
    check_compatibility,
    data_norm,
    discrete_norms,
    dtn_trace,
    energy,
    l2_q,
    scheme_residual,
    solve_linear,
)


def _manufactured_error(coeff, n_space, n_time, scheme=Scheme.TRAPEZOIDAL):
    grid = Grid.rectangle((-0.25, 0.25), (-0.25, 0.25), n_space, n_space, 0.5, n_time)
    data, exact = data_factory.manufactured(grid, coeff, kx=2 * np.pi, ky=2 * np.pi)
    u = solve_linear(data, coeff, grid, scheme=scheme)
    return l2_q(u.u - exact.u, grid), l2_q(exact.u, grid)


class TestExactFamilies:
    def test_zero_data_gives_zero(self, coeff, small_grid):
        u = solve_linear(data_factory.zero_data(small_grid), coeff, small_grid)
        assert not np.any(u.u)
        assert not np.any(energy(u, grid=small_grid))
        assert not np.any(dtn_trace(u, small_grid).values)

    def test_constant_is_preserved(self, coeff, small_grid):
        u = solve_linear(data_factory.constant_data(small_grid, 0.7), coeff, small_grid)
        inside = small_grid.inside
        np.testing.assert_allclose(u.u[:, inside], 0.7, atol=1e-10)
        np.testing.assert_allclose(u.u_t[:, inside], 0.0, atol=1e-10)

    @pytest.mark.parametrize("grid_fixture", ["small_grid", "disc_grid"])
    def test_quadratic_in_time_is_exact(self, coeff, grid_fixture, request):
        grid = request.getfixturevalue(grid_fixture)
        u = solve_linear(data_factory.quadratic_data(grid, coeff, 1.5), coeff, grid)
        t2 = 1.5 * grid.times**2
        np.testing.assert_allclose(u.u[:, grid.inside] - t2[:, None], 0.0, atol=1e-9)
        np.testing.assert_allclose(u.u_tt[:, grid.inside], 3.0, atol=1e-8)


class TestConvergence:
    def test_second_order_in_space_and_time(self, coeff):
        levels = ((17, 16), (33, 32), (65, 64))
        errors = np.array([_manufactured_error(coeff, n, m)[0] for n, m in levels])
        orders = np.log2(errors[:-1] / errors[1:])
        assert orders[0] >= 1.5
        assert orders[-1] >= 1.8

    def test_w_reduction_scheme_is_accurate(self, coeff):
        error, size = _manufactured_error(coeff, 17, 32, scheme=Scheme.W_REDUCTION)
        assert error / size < 0.05


class TestResiduals:
    def test_scheme_residual_vanishes_for_solver_output(self, coeff, small_grid):
        data, _ = data_factory.manufactured(small_grid, coeff, kx=2 * np.pi, ky=2 * np.pi)
        u = MGTSolver(coeff, small_grid).solve(data)
        residual = scheme_residual(u, data.f, coeff, small_grid)
        assert residual <= 1e-9 * l2_q(data.f, small_grid)

    def test_scheme_residual_sees_a_wrong_source(self, coeff, small_grid):
        data, _ = data_factory.manufactured(small_grid, coeff, kx=2 * np.pi, ky=2 * np.pi)
        u = MGTSolver(coeff, small_grid).solve(data)
        assert scheme_residual(u, 2.0 * data.f, coeff, small_grid) > 1e-3

    def test_apply_p_on_polynomials(self, small_grid):
        coeff = Coefficients(alpha=3.0, b=1.0, c=1.0)
        interior = small_grid.interior
        t2 = np.broadcast_to((small_grid.times**2)[:, None, None], small_grid.field_shape)
        np.testing.assert_allclose(apply_P(t2, coeff, small_grid).values[:, interior], 6.0)
        xx, _ = small_grid.mesh()
        x1 = np.broadcast_to(xx, small_grid.field_shape)
        np.testing.assert_allclose(
            apply_P(x1, coeff, small_grid).values[:, interior], 0.0, atol=1e-10
        )
        np.testing.assert_allclose(
            apply_P_factorized(t2, coeff, small_grid).values[:, interior], 6.0
        )

    def test_apply_p_matches_manufactured_source(self, coeff, probe_grid):
        data, exact = data_factory.manufactured(probe_grid, coeff, kx=2 * np.pi, ky=2 * np.pi)
        interior = probe_grid.interior
        p_u = apply_P(exact, coeff, probe_grid).values
        error = l2_q((p_u - data.f) * interior, probe_grid)
        assert error / l2_q(data.f * interior, probe_grid) < 0.05


class TestSolverReuse:
    def test_linearity(self, coeff, small_grid):
        rng = np.random.default_rng(3)
        first = data_factory.random_compatible_data(small_grid, rng)
        second = data_factory.random_compatible_data(small_grid, rng)
        solver = MGTSolver(coeff, small_grid)
        combined = solver.solve(first.combine(second, 2.0, -1.0))
        separate = solver.solve(first).scaled(2.0) - solver.solve(second)
        np.testing.assert_allclose(combined.u, separate.u, atol=1e-10)

    def test_damped_wave_zero_input(self, small_grid):
        y = DampedWaveSolver(1.0, -1.0, small_grid).solve()
        assert not np.any(y.u)


class TestCompatibility:
    def test_constant_data_pass(self, coeff, small_grid):
        report = check_compatibility(data_factory.constant_data(small_grid), coeff, small_grid, 2)
        assert report.passed
        assert report.first_failure is None

    def test_wrong_initial_acceleration_fails_at_order_two(self, coeff, small_grid):
        data = data_factory.quadratic_data(small_grid, coeff)
        data.u2[:] = 0.0
        report = check_compatibility(data, coeff, small_grid, 2)
        assert not report.passed
        assert report.first_failure == 2

    def test_too_few_levels(self, coeff):
        grid = Grid.rectangle((0.0, 1.0), (0.0, 1.0), 5, 5, 0.1, 2)
        with pytest.raises(InsufficientDataError):
            check_compatibility(DataTuple.zeros(grid), coeff, grid, 3)


class TestNorms:
    def test_unknown_norm_kind(self, small_grid):
        with pytest.raises(ArgumentError):
            discrete_norms(np.zeros(small_grid.field_shape), small_grid, "H7")

    def test_l2_of_constant_is_measure(self, small_grid):
        ones = np.ones(small_grid.field_shape)
        volume = small_grid.area * small_grid.t_final
        expected = np.sqrt(volume)
        assert discrete_norms(ones, small_grid, NormKind.L2_Q) == pytest.approx(expected, rel=1e-10)

    def test_data_norm_of_zero_data(self, small_grid):
        assert data_norm(DataTuple.zeros(small_grid), small_grid) == 0.0


class TestEnergy:
    def test_quadratic_in_time(self, small_grid):
        t = small_grid.times[:, None, None]
        ones = np.ones(small_grid.field_shape)
        values = energy(t**2 * ones, 2.0 * t * ones, 2.0 * ones, grid=small_grid)
        expected = 0.5 * small_grid.area * (4.0 * small_grid.times**2 + 4.0)
        np.testing.assert_allclose(values, expected, rtol=1e-10)

    def test_linear_in_space(self, small_grid):
        xx, _ = small_grid.mesh()
        u = np.broadcast_to(xx, small_grid.field_shape)
        zeros = np.zeros(small_grid.field_shape)
        values = energy(u, zeros, zeros, grid=small_grid)
        np.testing.assert_allclose(values, 0.5 * small_grid.area, rtol=1e-10)

    def test_estimate_holds_with_one_constant(self, coeff, small_grid):
        solver = MGTSolver(coeff, small_grid)

        def ratio(seed):
            data = data_factory.random_compatible_data(small_grid, np.random.default_rng(seed))
            u = solver.solve(data)
            bound = energy(u, grid=small_grid).max() + boundary_l2(
                dtn_trace(u, small_grid).values, small_grid
            ) ** 2
            return bound / data_norm(data, small_grid) ** 2

        constant = ratio(0)
        assert constant > 0.0
        assert all(ratio(seed) <= 2.0 * constant for seed in range(20))


class TestNeumannTrace:
    def test_linear_functions_on_faces(self, small_grid):
        xx, yy = small_grid.mesh()
        normals = small_grid.boundary_normals
        for values, normal in ((xx, (1.0, 0.0)), (yy, (0.0, 1.0))):
            u = np.broadcast_to(values, small_grid.field_shape)
            trace = dtn_trace(u, small_grid).values
            face = np.all(np.isclose(normals, normal), axis=1)
            assert face.any()
            np.testing.assert_allclose(trace[:, face], 1.0, atol=1e-10)


class TestRealData:
    def test_real_data_give_real_solution(self, coeff, small_grid):
        data, _ = data_factory.manufactured(small_grid, coeff, kx=2 * np.pi, ky=2 * np.pi)
        assert data.is_real()
        u = MGTSolver(coeff, small_grid).solve(data)
        assert np.abs(u.u.imag).max() <= settings.rounding_tol
        assert np.abs(u.u_tt.imag).max() <= settings.rounding_tol
