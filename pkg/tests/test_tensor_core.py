import threading

import numpy as np
import pytest

from tensor_core.activations import relu, relu_backward, sigmoid, sigmoid_backward
from tensor_core.conv import conv2d_backward, conv2d_forward
from tensor_core.dense import dense_backward, dense_forward
from tensor_core.gradcheck import LAYER_CHECKS, numerical_gradient, relative_error, run_layer_checks
from tensor_core.loss import softmax, softmax_xent
from tensor_core.normalization import RunningStats, batchnorm_backward, batchnorm_forward, lrn_forward
from tensor_core.params import ConvParams, LrnParams
from tensor_core.pooling import avgpool_forward, maxpool_backward, maxpool_forward, pool_output_hw
from tensor_core.reference import avgpool_naive, conv2d_naive, lrn_naive, maxpool_naive, resize_naive
from tensor_core.regularization import INFER, TRAIN, dropout, dropout_backward
from tensor_core.resize import resize_bilinear
from tensor_core.state import deterministic_mode, is_deterministic, set_num_threads
from tensor_core.tensor import as_tensor, flatten, unflatten
from utils.errors import InvalidParameterError, ShapeMismatchError


# =============================================================================
# Fixtures
# =============================================================================

@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_conv_case(rng):
    n = int(rng.integers(1, 4))
    cin = int(rng.integers(1, 4))
    cout = int(rng.integers(1, 5))
    h = int(rng.integers(4, 11))
    w = int(rng.integers(4, 11))
    padding = int(rng.integers(0, 3))
    kh = int(rng.integers(1, min(5, h + 2 * padding) + 1))
    kw = int(rng.integers(1, min(5, w + 2 * padding) + 1))
    stride = int(rng.integers(1, 4))
    params = ConvParams(cout, kh, kw, stride, padding)
    x = rng.standard_normal((n, cin, h, w))
    weights = rng.standard_normal((cout, cin, kh, kw))
    bias = rng.standard_normal(cout)
    return x, weights, bias, params


# =============================================================================
# Tensors
# =============================================================================

class TestTensor:
    def test_as_tensor_rejects_rank_five(self):
        with pytest.raises(InvalidParameterError):
            as_tensor(np.zeros((1, 1, 1, 1, 1)))

    def test_as_tensor_rejects_empty_axis(self):
        with pytest.raises(InvalidParameterError):
            as_tensor(np.zeros((2, 0)))

    def test_flatten_is_channel_major(self):
        x = np.arange(2 * 3 * 2 * 2, dtype=np.float64).reshape(2, 3, 2, 2)
        flat = flatten(x)
        assert flat.shape == (2, 12)
        assert flat[1, 4] == x[1, 1, 0, 0]
        np.testing.assert_array_equal(unflatten(flat, (3, 2, 2)), x)


# =============================================================================
# Convolution
# =============================================================================

class TestConvolution:
    def test_matches_naive_oracle_on_random_configs(self, rng):
        for _ in range(50):
            x, weights, bias, params = random_conv_case(rng)
            fast = conv2d_forward(x, weights, bias, params)
            slow = conv2d_naive(x, weights, bias, params)
            assert fast.shape == slow.shape
            np.testing.assert_allclose(fast, slow, rtol=0, atol=1e-12)

    def test_output_extent_formula(self):
        params = ConvParams(out_channels=4, kernel_h=3, kernel_w=5, stride=2, padding=1)
        assert params.output_hw(11, 13) == ((11 + 2 - 3) // 2 + 1, (13 + 2 - 5) // 2 + 1)

    def test_identity_kernel_copies_input(self, rng):
        x = rng.standard_normal((2, 1, 6, 7))
        weights = np.ones((1, 1, 1, 1))
        out = conv2d_forward(x, weights, None, ConvParams(1, 1, 1))
        np.testing.assert_array_equal(out, x)

    def test_weight_channel_mismatch_is_shape_error(self, rng):
        x = rng.standard_normal((1, 2, 5, 5))
        weights = rng.standard_normal((3, 1, 3, 3))
        with pytest.raises(ShapeMismatchError):
            conv2d_forward(x, weights, np.zeros(3), ConvParams(3, 3, 3))

    def test_kernel_larger_than_padded_input(self, rng):
        x = rng.standard_normal((1, 1, 3, 3))
        with pytest.raises(InvalidParameterError):
            conv2d_forward(x, rng.standard_normal((1, 1, 5, 5)), None, ConvParams(1, 5, 5))

    def test_invalid_params(self):
        with pytest.raises(InvalidParameterError):
            ConvParams(out_channels=0, kernel_h=3, kernel_w=3)
        with pytest.raises(InvalidParameterError):
            ConvParams(out_channels=1, kernel_h=3, kernel_w=3, stride=0)

    def test_threaded_batches_match_single_thread(self, rng):
        x, weights, bias, params = random_conv_case(rng)
        x = rng.standard_normal((6,) + x.shape[1:])
        reference = conv2d_forward(x, weights, bias, params)
        grad_out = rng.standard_normal(reference.shape)
        ref_grads = conv2d_backward(x, weights, params, grad_out)
        try:
            set_num_threads(3)
            with deterministic_mode(False):
                threaded = conv2d_forward(x, weights, bias, params)
                grads = conv2d_backward(x, weights, params, grad_out)
        finally:
            set_num_threads(1)
        np.testing.assert_allclose(threaded, reference, rtol=0, atol=1e-12)
        for got, want in zip(grads, ref_grads):
            np.testing.assert_allclose(got, want, rtol=0, atol=1e-10)

    def test_backward_matches_finite_differences(self, rng):
        x, weights, bias, params = random_conv_case(rng)
        g = rng.standard_normal(conv2d_forward(x, weights, bias, params).shape)
        grad_x, grad_w, grad_b = conv2d_backward(x, weights, params, g)

        def loss():
            return float(np.sum(g * conv2d_forward(x, weights, bias, params)))

        assert relative_error(grad_x, numerical_gradient(loss, x)) < 1e-6
        assert relative_error(grad_w, numerical_gradient(loss, weights)) < 1e-6
        assert relative_error(grad_b, numerical_gradient(loss, bias)) < 1e-6

    def test_zero_bias_conv_is_linear(self, rng):
        x, weights, _, params = random_conv_case(rng)
        y = rng.standard_normal(x.shape)
        mixed = conv2d_forward(2.5 * x - 0.75 * y, weights, None, params)
        separate = 2.5 * conv2d_forward(x, weights, None, params) - 0.75 * conv2d_forward(y, weights, None, params)
        np.testing.assert_allclose(mixed, separate, rtol=0, atol=1e-10)

    def test_shifted_input_shifts_output(self, rng):
        params = ConvParams(out_channels=2, kernel_h=3, kernel_w=3, stride=2)
        x = rng.standard_normal((1, 2, 13, 15))
        weights = rng.standard_normal((2, 2, 3, 3))
        full = conv2d_forward(x, weights, None, params)
        # crop one stride of rows and two of columns
        shifted = conv2d_forward(x[:, :, 2:, 4:], weights, None, params)
        np.testing.assert_allclose(shifted, full[:, :, 1:, 2:], rtol=0, atol=1e-12)


# =============================================================================
# Pooling
# =============================================================================

class TestPooling:
    def test_max_and_average_match_oracles(self, rng):
        for window, stride in [((2, 2), 2), ((3, 3), 2), ((2, 3), 1)]:
            x = rng.standard_normal((2, 3, 9, 8))
            out, _ = maxpool_forward(x, window, stride)
            np.testing.assert_allclose(out, maxpool_naive(x, window, stride), rtol=0, atol=1e-12)
            avg, _ = avgpool_forward(x, window, stride)
            np.testing.assert_allclose(avg, avgpool_naive(x, window, stride), rtol=0, atol=1e-12)

    def test_floor_semantics_drop_trailing_rows(self):
        assert pool_output_hw(5, 5, 2, 2) == (2, 2)
        assert pool_output_hw(27, 27, 3, 2) == (13, 13)

    def test_window_larger_than_input(self):
        with pytest.raises(ShapeMismatchError):
            pool_output_hw(2, 2, 3, 1)

    def test_max_tie_routes_gradient_to_first_position(self):
        x = np.ones((1, 1, 2, 2))
        out, indices = maxpool_forward(x, 2, 2)
        grad = maxpool_backward(indices, np.ones_like(out))
        np.testing.assert_array_equal(grad[0, 0], [[1.0, 0.0], [0.0, 0.0]])

    def test_average_of_two_by_two(self):
        out, _ = avgpool_forward(np.array([[[[1.0, 2.0], [3.0, 4.0]]]]), 2, 2)
        np.testing.assert_array_equal(out, [[[[2.5]]]])

    def test_max_backward_keeps_gradient_mass(self, rng):
        x = rng.standard_normal((2, 3, 9, 9))
        out, indices = maxpool_forward(x, 3, 2)
        grad_out = rng.standard_normal(out.shape)
        grad = maxpool_backward(indices, grad_out)
        assert grad.shape == x.shape
        np.testing.assert_allclose(grad.sum(axis=(2, 3)), grad_out.sum(axis=(2, 3)), rtol=0, atol=1e-12)


# =============================================================================
# Activations, dense and loss
# =============================================================================

class TestActivationsAndDense:
    def test_relu_subgradient_at_zero(self):
        x = np.array([[-1.0, 0.0, 2.0]])
        np.testing.assert_array_equal(relu(x), [[0.0, 0.0, 2.0]])
        np.testing.assert_array_equal(relu_backward(x, np.ones_like(x)), [[0.0, 0.0, 1.0]])

    def test_sigmoid_is_stable_for_large_inputs(self):
        x = np.array([[-1000.0, 0.0, 1000.0]])
        y = sigmoid(x)
        assert np.all(np.isfinite(y))
        np.testing.assert_allclose(y, [[0.0, 0.5, 1.0]], atol=1e-12)
        np.testing.assert_allclose(sigmoid_backward(y, np.ones_like(y)), [[0.0, 0.25, 0.0]], atol=1e-12)

    def test_activation_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            relu_backward(np.zeros((2, 3)), np.zeros((3, 2)))

    def test_dense_forward_and_shapes(self, rng):
        x = rng.standard_normal((4, 5))
        w = rng.standard_normal((5, 3))
        b = rng.standard_normal(3)
        np.testing.assert_allclose(dense_forward(x, w, b), x @ w + b)
        grad_x, grad_w, grad_b = dense_backward(x, w, np.ones((4, 3)))
        assert grad_x.shape == x.shape and grad_w.shape == w.shape and grad_b.shape == b.shape

    def test_dense_inner_mismatch(self, rng):
        with pytest.raises(ShapeMismatchError):
            dense_forward(rng.standard_normal((2, 4)), rng.standard_normal((5, 3)), np.zeros(3))


class TestSoftmaxXent:
    def test_uniform_logits_give_log_k(self):
        loss, probs, grad = softmax_xent(np.zeros((3, 4)), [0, 1, 3])
        assert loss == pytest.approx(np.log(4.0))
        np.testing.assert_allclose(probs, 0.25)
        np.testing.assert_allclose(grad.sum(axis=1), 0.0, atol=1e-15)

    def test_large_logits_stay_finite(self):
        loss, probs, _ = softmax_xent(np.array([[1000.0, 0.0, -1000.0]]), [0])
        assert np.isfinite(loss) and loss == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(softmax(np.array([[1000.0, 1000.0]])), [[0.5, 0.5]])

    def test_row_offset_leaves_loss_unchanged(self, rng):
        logits = rng.standard_normal((5, 4))
        labels = [0, 1, 2, 3, 1]
        loss, probs, _ = softmax_xent(logits, labels)
        offsets = np.array([[3.0], [-7.5], [0.25], [12.0], [-1.0]])
        moved_loss, moved_probs, _ = softmax_xent(logits + offsets, labels)
        assert abs(moved_loss - loss) < 1e-12
        np.testing.assert_allclose(moved_probs, probs, rtol=0, atol=1e-12)

    def test_label_out_of_range(self):
        with pytest.raises(InvalidParameterError):
            softmax_xent(np.zeros((1, 4)), [4])


# =============================================================================
# Normalization and dropout
# =============================================================================

class TestLocalResponseNormalization:
    def test_matches_oracle(self, rng):
        for depth in (1, 3, 5):
            params = LrnParams(depth_radius=depth, k=2.0, alpha=1e-2, beta=0.75)
            x = rng.standard_normal((2, 7, 4, 3))
            np.testing.assert_allclose(lrn_forward(x, params), lrn_naive(x, params), rtol=0, atol=1e-12)

    def test_single_channel_value(self):
        out = lrn_forward(np.ones((1, 1, 1, 1)), LrnParams())
        assert out[0, 0, 0, 0] == pytest.approx(1.0 / (2.0 + 1e-4) ** 0.75, rel=1e-12)

    def test_zero_alpha_only_rescales(self, rng):
        x = rng.standard_normal((2, 6, 3, 3))
        params = LrnParams(depth_radius=5, k=2.0, alpha=0.0, beta=0.75)
        np.testing.assert_allclose(lrn_forward(x, params), x / 2.0 ** 0.75, rtol=1e-14, atol=0)
        unit = LrnParams(k=1.0, alpha=0.0)
        np.testing.assert_array_equal(lrn_forward(x, unit), x)

    def test_invalid_constants(self):
        with pytest.raises(InvalidParameterError):
            LrnParams(depth_radius=0)
        with pytest.raises(InvalidParameterError):
            LrnParams(k=0.0)


class TestBatchNorm:
    def test_train_mode_normalizes_each_channel(self, rng):
        x = rng.standard_normal((8, 3, 5, 5)) * 4.0 + 2.0
        out, _ = batchnorm_forward(x, np.ones(3), np.zeros(3), 1e-5, TRAIN)
        np.testing.assert_allclose(out.mean(axis=(0, 2, 3)), 0.0, atol=1e-10)
        np.testing.assert_allclose(out.var(axis=(0, 2, 3)), 1.0, atol=1e-4)

    def test_running_stats_update_with_momentum(self, rng):
        x = rng.standard_normal((6, 2)) + 3.0
        stats = RunningStats.fresh(2, momentum=0.9)
        batchnorm_forward(x, np.ones(2), np.zeros(2), 1e-5, TRAIN, stats)
        np.testing.assert_allclose(stats.mean, 0.1 * x.mean(axis=0))
        np.testing.assert_allclose(stats.var, 0.9 + 0.1 * x.var(axis=0))

    def test_infer_mode_uses_running_stats(self, rng):
        x = rng.standard_normal((4, 2))
        stats = RunningStats(np.array([1.0, -1.0]), np.array([4.0, 1.0]))
        out, _ = batchnorm_forward(x, np.ones(2), np.zeros(2), 0.0, INFER, stats)
        np.testing.assert_allclose(out, (x - [1.0, -1.0]) / np.sqrt([4.0, 1.0]))

    def test_infer_mode_without_stats(self, rng):
        with pytest.raises(InvalidParameterError):
            batchnorm_forward(rng.standard_normal((2, 2)), np.ones(2), np.zeros(2), 1e-5, INFER)

    def test_gamma_shape_mismatch(self, rng):
        with pytest.raises(ShapeMismatchError):
            batchnorm_forward(rng.standard_normal((2, 3, 2, 2)), np.ones(2), np.zeros(2))

    def test_train_backward_matches_finite_differences(self, rng):
        x = rng.standard_normal((4, 3, 2, 2))
        gamma = rng.standard_normal(3)
        beta = rng.standard_normal(3)
        g = rng.standard_normal(x.shape)
        _, cache = batchnorm_forward(x, gamma, beta, 1e-5, TRAIN)
        grad_x, grad_gamma, grad_beta = batchnorm_backward(cache, g)

        def loss():
            return float(np.sum(g * batchnorm_forward(x, gamma, beta, 1e-5, TRAIN)[0]))

        assert relative_error(grad_x, numerical_gradient(loss, x)) < 1e-6
        assert relative_error(grad_gamma, numerical_gradient(loss, gamma)) < 1e-6
        assert relative_error(grad_beta, numerical_gradient(loss, beta)) < 1e-6


class TestDropout:
    def test_infer_mode_is_identity(self, rng):
        x = rng.standard_normal((3, 4))
        out, mask = dropout(x, 0.5, 7, INFER)
        np.testing.assert_array_equal(out, x)
        assert np.all(mask == 1)

    def test_same_seed_same_mask(self, rng):
        x = rng.standard_normal((4, 8, 3, 3))
        _, first = dropout(x, 0.5, 11, TRAIN)
        _, second = dropout(x, 0.5, 11, TRAIN)
        _, other = dropout(x, 0.5, 12, TRAIN)
        np.testing.assert_array_equal(first, second)
        assert not np.array_equal(first, other)

    def test_expectation_is_preserved(self):
        x = np.ones((10, 10, 100, 100))
        out, mask = dropout(x, 0.5, 3, TRAIN)
        assert out.mean() == pytest.approx(1.0, abs=0.02)
        assert set(np.unique(out)) <= {0.0, 2.0}
        np.testing.assert_array_equal(dropout_backward(mask, 0.5, np.ones_like(x)), out)

    def test_rate_must_be_below_one(self):
        with pytest.raises(InvalidParameterError):
            dropout(np.ones((2, 2)), 1.0, 0, TRAIN)


# =============================================================================
# Resize
# =============================================================================

class TestResize:
    def test_matches_oracle(self, rng):
        image = rng.standard_normal((2, 9, 13))
        for target in [(28, 28), (4, 5), (1, 7), (9, 13)]:
            np.testing.assert_allclose(resize_bilinear(image, target), resize_naive(image, target),
                                       rtol=0, atol=1e-12)

    def test_corners_are_preserved(self, rng):
        image = rng.standard_normal((1, 30, 80))
        out = resize_bilinear(image, (28, 28))
        for y, x, sy, sx in [(0, 0, 0, 0), (0, -1, 0, -1), (-1, 0, -1, 0), (-1, -1, -1, -1)]:
            assert out[0, y, x] == pytest.approx(image[0, sy, sx], abs=1e-12)

    def test_same_size_is_identity(self, rng):
        image = rng.standard_normal((3, 6, 4))
        np.testing.assert_allclose(resize_bilinear(image, (6, 4)), image, rtol=0, atol=1e-12)

    def test_invalid_target(self, rng):
        with pytest.raises(InvalidParameterError):
            resize_bilinear(rng.standard_normal((1, 4, 4)), (0, 3))


# =============================================================================
# Execution state
# =============================================================================

class TestExecutionState:
    def test_mode_is_scoped_to_the_entering_thread(self):
        barrier = threading.Barrier(2)
        seen = {}

        def run(name, flag):
            with deterministic_mode(flag):
                barrier.wait()
                seen[name] = is_deterministic()
                barrier.wait()

        threads = [
            threading.Thread(target=run, args=("fast", False)),
            threading.Thread(target=run, args=("exact", True)),
        ]
        for thread in threads:
            thread.start()
        for thread in threads:
            thread.join(timeout=10)
        assert seen == {"fast": False, "exact": True}

    def test_mode_restored_after_nested_blocks(self):
        before = is_deterministic()
        with deterministic_mode(False):
            assert not is_deterministic()
            with deterministic_mode(True):
                assert is_deterministic()
            assert not is_deterministic()
        assert is_deterministic() == before


# =============================================================================
# Gradient check suite
# =============================================================================

class TestGradientChecks:
    def test_every_layer_kind_passes(self):
        report = run_layer_checks(seed=0, configs=5)
        assert set(report) == set(LAYER_CHECKS)
        for kind, error in report.items():
            assert error <= 1e-4, f"{kind}: {error}"

    def test_report_is_deterministic(self):
        assert run_layer_checks(seed=3, configs=2) == run_layer_checks(seed=3, configs=2)

    def test_relative_error_of_zero_gradients(self):
        assert relative_error(np.zeros(3), np.zeros(3)) == 0.0
