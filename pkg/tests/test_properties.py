"""Property-based checks of the small numerical building blocks."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from jmgtlab.models.coefficients import Coefficients
from jmgtlab.models.fields import DataTuple
from jmgtlab.models.grid import Grid
from jmgtlab.models.probe import AngularProfile, Cutoff, ProfileKind
from jmgtlab.services.cgo import decay_slope, integrate_characteristics

GRID = Grid.rectangle((0.0, 1.0), (0.0, 1.0), 5, 5, 0.2, 4)

finite = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False)


@st.composite
def knots(draw):
    start = draw(st.floats(min_value=0.0, max_value=5.0))
    width = draw(st.floats(min_value=1e-2, max_value=5.0))
    return Cutoff(start, start + width)


class TestCutoff:
    @given(cutoff=knots(), s=st.lists(finite, min_size=2, max_size=20))
    @settings(max_examples=50, deadline=None)
    def test_values_in_unit_interval_and_monotone(self, cutoff, s):
        s = np.sort(np.asarray(s))
        values = cutoff.value(s)
        assert np.all((values >= 0.0) & (values <= 1.0))
        assert np.all(np.diff(values) >= -1e-12)

    @given(cutoff=knots())
    @settings(max_examples=30, deadline=None)
    def test_flat_outside_the_knots(self, cutoff):
        assert cutoff.value(cutoff.start - 1.0) == 0.0
        assert cutoff.value(cutoff.end + 1.0) == 1.0
        assert cutoff.derivative(cutoff.end + 1.0) == 0.0


class TestProfiles:
    @given(
        center=st.floats(min_value=-np.pi, max_value=np.pi),
        width=st.floats(min_value=0.05, max_value=2.0),
        theta=st.floats(min_value=-10.0, max_value=10.0),
    )
    @settings(max_examples=50, deadline=None)
    def test_von_mises_is_bounded_and_periodic(self, center, width, theta):
        profile = AngularProfile(ProfileKind.VON_MISES, center, width)
        value = profile.value(theta)
        assert 0.0 <= value <= 1.0 + 1e-12
        assert profile.value(theta + 2.0 * np.pi) == pytest.approx(value, abs=1e-9)


class TestCoefficients:
    @given(value=st.floats(min_value=0.5, max_value=2.0))
    @settings(max_examples=30, deadline=None)
    def test_admissible_values(self, value):
        coeff = Coefficients(alpha=value, b=value, c=value)
        assert coeff.beta == pytest.approx(value)
        assert coeff.gamma == pytest.approx(0.0, abs=1e-12)

    @given(value=st.floats(min_value=60.0, max_value=1e6))
    @settings(max_examples=20, deadline=None)
    def test_out_of_range_is_rejected(self, value):
        with pytest.raises(ValidationError):
            Coefficients(alpha=1.0, b=value, c=1.0)


class TestDataCombination:
    @given(a=finite, b=finite, seed=st.integers(min_value=0, max_value=2**16))
    @settings(max_examples=25, deadline=None)
    def test_combine_is_linear(self, a, b, seed):
        rng = np.random.default_rng(seed)
        first, second = DataTuple.zeros(GRID), DataTuple.zeros(GRID)
        first.h[:] = rng.standard_normal(first.h.shape)
        second.u1[:] = rng.standard_normal(second.u1.shape)
        combined = first.combine(second, a, b)
        np.testing.assert_allclose(combined.h, a * first.h)
        np.testing.assert_allclose(combined.u1, b * second.u1)
        assert combined.f is None


class TestCharacteristics:
    @given(
        initial=st.lists(finite, min_size=6, max_size=16),
        dt=st.floats(min_value=1e-3, max_value=1.0),
    )
    @settings(max_examples=30, deadline=None)
    def test_unit_transfer_shifts_initial_values(self, initial, dt):
        initial = np.asarray(initial)
        n_steps = 3
        out = integrate_characteristics(
            np.zeros((n_steps, initial.size)), initial, dt, np.ones(initial.size - 1)
        )
        for n in range(n_steps):
            np.testing.assert_allclose(out[n], initial[n : n + out.shape[1]])

    @given(
        initial=st.lists(finite, min_size=6, max_size=16),
        rate=finite,
        dt=st.floats(min_value=1e-3, max_value=1.0),
    )
    @settings(max_examples=30, deadline=None)
    def test_constant_source_adds_elapsed_time(self, initial, rate, dt):
        # a_t - a_r = rate has the solution psi(r + t) + rate t
        initial = np.asarray(initial)
        n_levels = 4
        out = integrate_characteristics(
            np.full((n_levels, initial.size), rate), initial, dt, np.ones(initial.size - 1)
        )
        for n in range(n_levels):
            expected = initial[n : n + out.shape[1]] + rate * n * dt
            np.testing.assert_allclose(out[n], expected, rtol=1e-10, atol=1e-9)


class TestDecaySlope:
    @given(power=st.floats(min_value=-3.0, max_value=-0.1), scale=st.floats(0.1, 10.0))
    @settings(max_examples=30, deadline=None)
    def test_recovers_power_law_exponent(self, power, scale):
        sigmas = np.array([5.0, 10.0, 20.0, 40.0])
        assert decay_slope(sigmas, scale * sigmas**power) == pytest.approx(power, rel=1e-9)
