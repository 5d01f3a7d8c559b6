import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from leveltopo import (RELU, SIGMOID, TANH, Activation, ActivationKind,
                       activation_apply, activation_derivative, one_to_one_relu,
                       one_to_one_relu_bound, uniform_deviation)


class TestOneToOneRelu:
    def test_continuous_at_joint(self):
        assert activation_apply(one_to_one_relu(1), 0.0) == 0.0

    def test_identity_on_nonnegative(self):
        assert activation_apply(one_to_one_relu(5), 2.0) == 2.0

    def test_negative_branch_closed_form(self):
        # (1/2) * arctan(-1) = -pi/8
        got = activation_apply(one_to_one_relu(2), -1.0)
        assert got == pytest.approx(-math.pi / 8, abs=1e-15)
        assert got == pytest.approx(-0.39269908169872414, abs=0)

    def test_negative_branch_is_negative(self):
        xs = np.linspace(-50, -1e-9, 100)
        assert np.all(activation_apply(one_to_one_relu(3), xs) < 0)

    @given(st.integers(1, 100),
           st.floats(-100, 100, allow_nan=False),
           st.floats(1e-5, 100, allow_nan=False))
    def test_strictly_monotone(self, n, x, gap):
        # gap floor keeps the increment resolvable in float64: the slope of
        # the negative branch is at least 1/(n (1 + x^2)) ~ 1e-6 here
        act = one_to_one_relu(n)
        assert activation_apply(act, x) < activation_apply(act, x + gap)

    def test_strictly_monotone_on_grid(self):
        xs = np.linspace(-50, 50, 10001)
        for n in (1, 5, 100):
            vals = activation_apply(one_to_one_relu(n), xs)
            assert np.all(np.diff(vals) > 0)

    def test_sharpness_required(self):
        with pytest.raises(ValueError):
            Activation(ActivationKind.ONE_TO_ONE_RELU)
        with pytest.raises(ValueError):
            Activation(ActivationKind.SIGMOID, sharpness=2)

    def test_derivative_right_of_joint_is_one(self):
        assert activation_derivative(one_to_one_relu(7), 0.0) == 1.0
        assert activation_derivative(RELU, 0.0) == 1.0

    def test_derivative_negative_branch(self):
        # d/dx arctan(x)/n = 1/(n (1 + x^2))
        got = activation_derivative(one_to_one_relu(4), -2.0)
        assert got == pytest.approx(1.0 / (4 * 5.0), rel=1e-15)


class TestClassicActivations:
    def test_sigmoid_at_zero(self):
        assert activation_apply(SIGMOID, 0.0) == 0.5

    def test_sigmoid_saturates_cleanly(self):
        assert activation_apply(SIGMOID, -1000.0) == 0.0
        assert activation_apply(SIGMOID, 1000.0) == 1.0

    def test_tanh_odd(self):
        xs = np.linspace(-5, 5, 101)
        np.testing.assert_allclose(activation_apply(TANH, xs),
                                   -activation_apply(TANH, -xs), atol=1e-16)

    def test_relu_not_one_to_one(self):
        assert not RELU.one_to_one
        assert SIGMOID.one_to_one and TANH.one_to_one
        assert one_to_one_relu(3).one_to_one

    @given(st.floats(-30, 30))
    def test_sigmoid_derivative_identity(self, x):
        s = activation_apply(SIGMOID, x)
        assert activation_derivative(SIGMOID, x) == pytest.approx(s * (1 - s), rel=1e-12)


class TestUniformDeviation:
    def test_identical_functions(self):
        assert uniform_deviation(RELU, RELU, (-10, 10), 1001) == 0.0
        act = one_to_one_relu(10)
        assert uniform_deviation(act, act, (-7, 3), 500) == 0.0

    def test_bounded_by_pi_over_2n(self):
        for n in (1, 2, 5, 10, 100):
            dev = uniform_deviation(one_to_one_relu(n), RELU, (-100, 100), 10001)
            assert 0 < dev <= one_to_one_relu_bound(n)

    def test_approaches_bound_on_wide_interval(self):
        n = 4
        dev = uniform_deviation(one_to_one_relu(n), RELU, (-1e8, 1e8), 10001)
        assert dev == pytest.approx(one_to_one_relu_bound(n), rel=1e-6)

    def test_nonincreasing_in_sharpness(self):
        devs = [uniform_deviation(one_to_one_relu(n), RELU, (-1e6, 1e6), 20001)
                for n in (1, 2, 5, 10, 100)]
        assert all(a > b for a, b in zip(devs, devs[1:]))

    def test_grid_points_validated(self):
        with pytest.raises(ValueError):
            uniform_deviation(RELU, RELU, (-1, 1), 1)
