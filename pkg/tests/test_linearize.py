"""Second-order linearization in the data and its W-reduction."""

import numpy as np
import pytest

from jmgtlab.errors import ArgumentError, ShapeError
from jmgtlab.models.grid import Grid
from jmgtlab.models.linearization import EpsilonDesign
from jmgtlab.models.nonlinearity import NonlinearityField
from jmgtlab.services import data_factory
from jmgtlab.services.linearize import (
    cross_difference,
    direct_linearized,
    linearize_pair,
    linearized_source,
    reduce_to_W,
)
from jmgtlab.services.mgt_core import MGTSolver, l2_q
from jmgtlab.services.runner import TaskRunner


@pytest.fixture
def bump(small_grid):
    return NonlinearityField.gaussian_bump(small_grid, (0.0, 0.0), 0.1, 1.0, (0.05, 0.45))


@pytest.fixture
def pulses(small_grid):
    first = data_factory.boundary_pulse(small_grid, 1.0, 0.0, 0.25, angular_mode=1)
    second = data_factory.boundary_pulse(small_grid, 1.0, 0.0, 0.25, angular_mode=2)
    return first, second


class TestSource:
    def test_symmetric_in_the_two_solutions(self, coeff, small_grid, bump, pulses):
        solver = MGTSolver(coeff, small_grid)
        w1, w2 = (solver.solve(data) for data in pulses)
        forward = linearized_source(bump, w1, w2).values
        backward = linearized_source(bump, w2, w1).values
        np.testing.assert_allclose(forward, backward, atol=1e-14)

    def test_shape_mismatch(self, coeff, small_grid, probe_grid, pulses):
        w1 = MGTSolver(coeff, small_grid).solve(pulses[0])
        p = NonlinearityField.zero(probe_grid)
        with pytest.raises(ShapeError):
            linearized_source(p, w1, w1)

    def test_zero_p_gives_zero(self, coeff, small_grid, pulses):
        solver = MGTSolver(coeff, small_grid)
        w1, w2 = (solver.solve(data) for data in pulses)
        w = direct_linearized(w1, w2, NonlinearityField.zero(small_grid), coeff, small_grid)
        assert not np.any(w.u)


class TestCrossDifference:
    def test_agrees_with_direct_solve(self, coeff, small_grid, bump, pulses):
        design = EpsilonDesign(*pulses, eps1=1e-3, eps2=1e-3)
        direct = linearize_pair(design, bump, coeff, small_grid, method="direct").w
        crossed = cross_difference(design, bump, coeff, small_grid)
        assert l2_q(crossed.u - direct.u, small_grid) / l2_q(direct.u, small_grid) < 0.05

    def test_discrepancy_shrinks_with_eps(self, coeff, small_grid, bump, pulses):
        direct = linearize_pair(EpsilonDesign(*pulses), bump, coeff, small_grid).w

        def discrepancy(eps):
            crossed = cross_difference(EpsilonDesign(*pulses, eps, eps), bump, coeff, small_grid)
            return l2_q(crossed.u - direct.u, small_grid)

        assert discrepancy(4e-3) > 2.0 * discrepancy(1e-3)

    def test_runner_gives_the_same_result(self, coeff, small_grid, bump, pulses):
        design = EpsilonDesign(*pulses)
        serial = cross_difference(design, bump, coeff, small_grid)
        threaded = cross_difference(design, bump, coeff, small_grid, runner=TaskRunner(3))
        np.testing.assert_allclose(threaded.u, serial.u, rtol=1e-10, atol=1e-12)

    def test_zero_eps_is_rejected(self, pulses):
        with pytest.raises(ArgumentError):
            EpsilonDesign(*pulses, eps1=0.0)

    def test_unknown_method(self, coeff, small_grid, bump, pulses):
        with pytest.raises(ArgumentError):
            linearize_pair(EpsilonDesign(*pulses), bump, coeff, small_grid, method="secant")


class TestReduction:
    def test_w_satisfies_the_damped_wave_form(self, coeff):
        # fine time steps: the residual is a second-order time-difference defect
        grid = Grid.rectangle((-0.25, 0.25), (-0.25, 0.25), 17, 17, 0.5, 128)
        p = NonlinearityField.gaussian_bump(grid, (0.0, 0.0), 0.1, 1.0, (0.05, 0.45))
        design = EpsilonDesign(
            data_factory.boundary_pulse(grid, 1.0, 0.0, 0.25, angular_mode=1),
            data_factory.boundary_pulse(grid, 1.0, 0.0, 0.25, angular_mode=2),
        )
        pair = linearize_pair(design, p, coeff, grid)
        source = linearized_source(p, pair.w1, pair.w2).values * grid.interior
        assert pair.reduction.residual_norm < 0.1 * l2_q(source, grid)

    def test_w_definition(self, coeff, small_grid, bump, pulses):
        pair = linearize_pair(EpsilonDesign(*pulses), bump, coeff, small_grid)
        reduction = reduce_to_W(pair.w, coeff, small_grid)
        np.testing.assert_allclose(reduction.W, pair.w.u_t + coeff.beta * pair.w.u)
