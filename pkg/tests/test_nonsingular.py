import numpy as np
import pytest

from leveltopo import (SIGMOID, Layer, Network, Window, check_injective_on_grid,
                       decompose, forward_batch, init_weights, is_nonsingular,
                       make_nonsingular, one_to_one_relu, pad_to_width, scaled_det)
from leveltopo.nonsingular import TOL_DET, NonSingularizationError


def narrow_net(widths=(2, 1, 2, 1), activation=SIGMOID, seed=11):
    return init_weights(list(widths), activation, seed)


class TestScaledDet:
    def test_identity(self):
        assert scaled_det(np.eye(3)) == 1.0

    def test_zero_row(self):
        assert scaled_det(np.array([[1.0, 2.0], [0.0, 0.0]])) == 0.0

    def test_scale_invariance(self):
        m = np.array([[3.0, -1.0], [2.0, 5.0]])
        assert scaled_det(m) == pytest.approx(scaled_det(1e6 * m), rel=1e-12)

    def test_near_singular_example(self):
        # det([[1,1],[1,1+1e-14]]) = 1e-14, far below the 1e-9 tolerance
        m = np.array([[1.0, 1.0], [1.0, 1.0 + 1e-14]])
        assert scaled_det(m) < 1e-9
        assert scaled_det(m) == pytest.approx(1e-14, rel=0.5)

    def test_matches_library_det_on_random(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            m = rng.normal(size=(3, 3))
            scale = np.prod(np.max(np.abs(m), axis=1))
            assert scaled_det(m) == pytest.approx(abs(np.linalg.det(m)) / scale, rel=1e-9)


class TestPadToWidth:
    def test_uniform_net_returned_unchanged(self):
        net = narrow_net((2, 2, 2, 1))
        assert pad_to_width(net, 2) is net

    def test_forward_preserved_exactly(self):
        net = narrow_net((2, 1, 2, 1))
        padded = pad_to_width(net, 2)
        assert all(layer.n_out == 2 for layer in padded.layers[:-1])
        xs = np.random.default_rng(0).normal(scale=3.0, size=(1000, 2))
        np.testing.assert_array_equal(forward_batch(net, xs), forward_batch(padded, xs))

    def test_padded_layer_is_singular(self):
        net = narrow_net((2, 1, 2, 1))
        padded = pad_to_width(net, 2)
        report = is_nonsingular(padded)
        assert not report.verdict
        assert min(report.determinants) == 0.0

    def test_rejects_overwide_hidden_layer(self):
        net = narrow_net((2, 3, 1))
        with pytest.raises(ValueError):
            pad_to_width(net, 2)

    def test_rejects_input_dim_mismatch(self):
        net = narrow_net((2, 2, 1))
        with pytest.raises(ValueError):
            pad_to_width(net, 3)


class TestIsNonsingular:
    def test_identity_layers_pass(self):
        net = Network(2, (Layer(np.eye(2), np.zeros(2)),
                          Layer(np.eye(2), np.zeros(2)),
                          Layer(np.ones((1, 2)), np.zeros(1))), SIGMOID)
        report = is_nonsingular(net)
        assert report.verdict
        assert report.determinants == (1.0, 1.0)
        assert report.widths_uniform and report.activation_one_to_one

    def test_duplicated_row_fails(self):
        net = Network(2, (Layer(np.array([[1.0, 2.0], [1.0, 2.0]]), np.zeros(2)),
                          Layer(np.ones((1, 2)), np.zeros(1))), SIGMOID)
        assert not is_nonsingular(net).verdict

    def test_relu_activation_fails(self):
        from leveltopo import RELU

        net = Network(2, (Layer(np.eye(2), np.zeros(2)),
                          Layer(np.ones((1, 2)), np.zeros(1))), RELU)
        report = is_nonsingular(net)
        assert not report.activation_one_to_one and not report.verdict

    def test_nonuniform_width_fails(self):
        net = narrow_net((2, 1, 2, 1))
        assert not is_nonsingular(net).widths_uniform

    def test_verdict_formula(self):
        net = narrow_net((2, 2, 2, 1))
        report = is_nonsingular(net)
        assert report.verdict == (report.widths_uniform and report.activation_one_to_one
                                  and all(d >= report.tolerance_used
                                          for d in report.determinants))

    def test_zero_head_warns(self):
        net = Network(2, (Layer(np.eye(2), np.zeros(2)),
                          Layer(np.zeros((1, 2)), np.zeros(1))), SIGMOID)
        with pytest.warns(UserWarning, match="head"):
            is_nonsingular(net)


class TestMakeNonsingular:
    def test_untouched_when_already_nonsingular(self):
        net = narrow_net((2, 2, 2, 1))
        assert is_nonsingular(net).verdict
        assert make_nonsingular(net, 1e-3, seed=0) is net

    def test_zero_matrix_perturbed_within_delta(self):
        net = Network(2, (Layer(np.zeros((2, 2)), np.zeros(2)),
                          Layer(np.ones((1, 2)), np.zeros(1))), SIGMOID)
        fixed = make_nonsingular(net, 1e-3, seed=4)
        assert is_nonsingular(fixed).verdict
        assert np.max(np.abs(fixed.layers[0].weights)) <= 1e-3

    def test_idempotent(self):
        net = pad_to_width(narrow_net((2, 1, 2, 1)), 2)
        once = make_nonsingular(net, 1e-4, seed=9)
        assert make_nonsingular(once, 1e-4, seed=10) is once

    def test_forward_deviation_shrinks_with_delta(self):
        net = pad_to_width(narrow_net((2, 1, 1, 1), seed=3), 2)
        xs = np.random.default_rng(1).uniform(-3, 3, size=(1000, 2))
        base = forward_batch(net, xs)
        devs = []
        for delta in (1e-2, 1e-4):
            fixed = make_nonsingular(net, delta, seed=5)
            devs.append(np.max(np.abs(forward_batch(fixed, xs) - base)))
        assert devs[1] < devs[0]
        assert devs[1] > 0

    def test_requires_uniform_widths(self):
        with pytest.raises(ValueError):
            make_nonsingular(narrow_net((2, 1, 2, 1)), 1e-3, seed=0)

    def test_gives_up_with_failing_layer_index(self, monkeypatch):
        import leveltopo.nonsingular as ns

        monkeypatch.setattr(ns, "MAX_ATTEMPTS", 0)
        net = Network(2, (Layer(np.zeros((2, 2)), np.zeros(2)),
                          Layer(np.ones((1, 2)), np.zeros(1))), SIGMOID)
        with pytest.raises(NonSingularizationError) as err:
            make_nonsingular(net, 1e-3, seed=0)
        assert err.value.layer_index == 0


class TestConstructionPipeline:
    @pytest.mark.parametrize("activation", [SIGMOID, one_to_one_relu(5)])
    def test_pad_then_perturb_passes_membership(self, activation):
        rng = np.random.default_rng(2024)
        for _ in range(10):
            depth = int(rng.integers(1, 5))
            widths = [2] + [int(rng.integers(1, 3)) for _ in range(depth)] + [1]
            net = init_weights(widths, activation, int(rng.integers(2 ** 31)))
            fixed = make_nonsingular(pad_to_width(net, 2), 1e-3,
                                     seed=int(rng.integers(2 ** 31)))
            assert is_nonsingular(fixed).verdict


class TestInjectivityOnGrid:
    def window(self):
        return Window(np.array([-3.0, -3.0]), np.array([3.0, 3.0]))

    def test_identity_trunk(self):
        trunk = Network(2, (Layer(np.eye(2), np.zeros(2)),), SIGMOID,
                        final_activation=False)
        assert check_injective_on_grid(trunk, self.window(), 41, min_sep=1.0)

    def test_constant_trunk_fails(self):
        trunk = Network(2, (Layer(np.zeros((2, 2)), np.zeros(2)),), SIGMOID)
        assert not check_injective_on_grid(trunk, self.window(), 41)

    def test_rank_deficient_trunk_fails(self):
        # projects onto the x axis: whole columns of the grid collide
        trunk = Network(2, (Layer(np.array([[1.0, 0.0], [0.0, 0.0]]), np.zeros(2)),),
                        SIGMOID, final_activation=False)
        assert not check_injective_on_grid(trunk, self.window(), 41)

    def test_random_nonsingular_sigmoid_trunk(self):
        net = make_nonsingular(pad_to_width(narrow_net((2, 2, 2, 1), seed=8), 2),
                               1e-3, seed=1)
        trunk, _ = decompose(net)
        assert check_injective_on_grid(trunk, self.window(), 101)
