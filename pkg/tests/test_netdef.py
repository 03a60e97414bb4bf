import json
import struct

import numpy as np
import pytest

from netdef.builders import build_alexnet, build_network, build_tranet, default_input_size, scaled_width
from netdef.checkpoint import checkpoint_param_count, load_checkpoint, save_checkpoint
from netdef.gradcheck import check_network, network_gradient_errors, tiny_spec
from netdef.network import backward, backward_with_input, forward, init_params
from netdef.spec import (
    LayerKind,
    LayerSpec,
    NetworkSpec,
    conv_layer,
    dense_layer,
    dropout_layer,
    flatten_layer,
    infer_shapes,
    lrn_layer,
    param_count,
    pool_layer,
    relu_layer,
    softmax_output,
)
from tensor_core.loss import softmax_xent
from tensor_core.regularization import INFER, TRAIN
from utils.errors import (
    CheckpointError,
    CheckpointShapeError,
    CheckpointTruncatedError,
    CheckpointVersionError,
    InvalidParameterError,
    ShapeMismatchError,
)


# =============================================================================
# Fixtures
# =============================================================================

@pytest.fixture
def tranet():
    return build_tranet((1, 28, 28), 4)


@pytest.fixture
def batch():
    return np.random.default_rng(5).random((3, 1, 28, 28))


def spatial_trace(spec):
    return [shape[1] for shape in infer_shapes(spec) if len(shape) == 3]


# =============================================================================
# Layer specs
# =============================================================================

class TestLayerSpec:
    def test_conv_requires_geometry(self):
        with pytest.raises(ValueError):
            LayerSpec(kind=LayerKind.CONV)

    def test_relu_rejects_extra_fields(self):
        with pytest.raises(ValueError):
            LayerSpec(kind=LayerKind.RELU, units=3)

    def test_network_must_end_with_softmax(self):
        with pytest.raises(ValueError):
            NetworkSpec(name="bad", input_shape=(1, 8, 8), layers=[flatten_layer(), dense_layer(4)], num_classes=4)

    def test_dense_without_flatten_names_layer(self):
        spec = NetworkSpec(name="bad", input_shape=(1, 8, 8), layers=[dense_layer(4), softmax_output()],
                           num_classes=4)
        with pytest.raises(ShapeMismatchError, match="layer 0"):
            infer_shapes(spec)

    def test_softmax_width_must_match_classes(self):
        spec = NetworkSpec(name="bad", input_shape=(1, 4, 4),
                           layers=[flatten_layer(), dense_layer(3), softmax_output()], num_classes=4)
        with pytest.raises(ShapeMismatchError):
            infer_shapes(spec)


# =============================================================================
# Builders
# =============================================================================

class TestTraNet:
    def test_layer_sequence(self, tranet):
        block = ["Conv", "ReLU", "BatchNorm"]
        expected = block + ["MaxPool"] + block + ["MaxPool"] + block + ["Flatten", "Dense", "SoftmaxOutput"]
        assert list(tranet.kinds) == expected

    def test_shape_trace(self, tranet):
        assert spatial_trace(tranet) == [26, 26, 26, 13, 11, 11, 11, 5, 3, 3, 3]
        assert infer_shapes(tranet)[-1] == (4,)

    def test_parameter_count(self, tranet):
        assert param_count(tranet) == 7156
        assert init_params(tranet, 0).param_count() == 7156

    def test_traditional_variant(self):
        spec = build_network("tranet-trad")
        assert spec.count(LayerKind.SIGMOID) == 3
        assert spec.count(LayerKind.AVGPOOL) == 2
        assert spec.count(LayerKind.RELU) == 0

    def test_other_input_sizes(self):
        assert infer_shapes(build_tranet((1, 32, 32)))[-4] == (32, 4, 4)
        assert infer_shapes(build_tranet((1, 18, 18)))[-4] == (32, 1, 1)

    def test_too_small_input(self):
        with pytest.raises(InvalidParameterError):
            build_tranet((1, 16, 16))

    def test_three_channels(self):
        spec = build_network("tranet", (28, 28), channels=3)
        assert spec.input_shape == (3, 28, 28)
        assert param_count(spec) == 7156 + 2 * 8 * 9


class TestAlexNet:
    def test_full_width_structure(self):
        spec = build_alexnet(4)
        assert spec.count(LayerKind.CONV) == 5
        assert spec.count(LayerKind.DENSE) == 3
        assert spec.count(LayerKind.LRN) == 2
        assert spec.count(LayerKind.DROPOUT) == 2
        assert sorted(set(spatial_trace(spec)), reverse=True) == [55, 27, 13, 6]
        assert infer_shapes(spec)[15] == (9216,)

    def test_full_width_parameter_count(self):
        assert param_count(build_alexnet(4)) == 58274500

    def test_scaled_widths(self):
        assert scaled_width(96, 1 / 8) == 12
        assert scaled_width(384, 1 / 3) == 128
        assert scaled_width(3, 0.1) == 1

    def test_scaled_alexnet_on_small_input(self):
        spec = build_network("alexnet-s8")
        assert spec.input_shape == (1, 67, 67)
        assert spatial_trace(spec) == [15, 15, 15, 7, 7, 7, 7, 3, 3, 3, 3, 3, 3, 3, 1]
        assert param_count(spec) == 341212

    def test_incompatible_input_suggests_size(self):
        with pytest.raises(InvalidParameterError, match="67x67"):
            build_network("alexnet-s8", (64, 64))

    def test_width_scale_range(self):
        with pytest.raises(InvalidParameterError):
            build_alexnet(4, width_scale=1.5)

    def test_name_grammar(self):
        assert default_input_size("alexnet") == (227, 227)
        assert default_input_size("alexnet-s4") == (67, 67)
        assert default_input_size("tranet") == (28, 28)
        with pytest.raises(InvalidParameterError):
            build_network("resnet")

    @pytest.mark.slow
    def test_full_width_forward_backward_batch_one(self):
        spec = build_alexnet(4)
        network = init_params(spec, 0, np.float32)
        image = np.random.default_rng(0).random((1, 1, 227, 227)).astype(np.float32)
        trace = []
        logits, cache = forward(network, image, TRAIN, seed=1, trace=trace)
        assert logits.shape == (1, 4) and np.all(np.isfinite(logits))
        assert [shape[1] for shape in trace if len(shape) == 3][:4] == [55, 55, 55, 27]
        _, _, grad = softmax_xent(logits.astype(np.float64), [2])
        grads = backward(network, cache, grad.astype(np.float32))
        for layer, layer_grads in zip(network.params, grads):
            for key, value in layer.items():
                assert layer_grads[key].shape == value.shape
                assert np.all(np.isfinite(layer_grads[key]))


# =============================================================================
# Initialization and passes
# =============================================================================

class TestInitialization:
    def test_same_seed_same_weights(self, tranet):
        first = init_params(tranet, 7)
        second = init_params(tranet, 7)
        other = init_params(tranet, 8)
        for a, b, c in zip(first.params, second.params, other.params):
            for key in a:
                np.testing.assert_array_equal(a[key], b[key])
        assert not np.array_equal(first.params[0]["weight"], other.params[0]["weight"])

    def test_he_and_glorot_scales(self):
        spec = NetworkSpec(
            name="wide", input_shape=(1, 16, 16),
            layers=[flatten_layer(), dense_layer(256), relu_layer(), dense_layer(4), softmax_output()],
            num_classes=4,
        )
        network = init_params(spec, 0)
        he = network.params[1]["weight"]
        glorot = network.params[3]["weight"]
        assert he.std() == pytest.approx(np.sqrt(2.0 / 256), rel=0.03)
        assert glorot.std() == pytest.approx(np.sqrt(2.0 / 260), rel=0.1)
        assert np.all(network.params[1]["bias"] == 0)

    def test_batchnorm_starts_at_identity(self, tranet):
        network = init_params(tranet, 0)
        np.testing.assert_array_equal(network.params[2]["gamma"], np.ones(8))
        np.testing.assert_array_equal(network.params[2]["beta"], np.zeros(8))
        stats = network.running_stats[2]
        assert np.all(stats.mean == 0) and np.all(stats.var == 1)

    def test_negative_seed(self, tranet):
        with pytest.raises(InvalidParameterError):
            init_params(tranet, -1)


class TestForwardBackward:
    def test_infer_is_per_sample(self, tranet, batch):
        network = init_params(tranet, 0)
        full, _ = forward(network, batch, INFER)
        single, _ = forward(network, batch[1:2], INFER)
        np.testing.assert_allclose(single[0], full[1], rtol=0, atol=1e-12)

    def test_trace_matches_inferred_shapes(self, tranet, batch):
        trace = []
        forward(init_params(tranet, 0), batch, INFER, trace=trace)
        assert trace == infer_shapes(tranet)

    def test_train_mode_updates_running_stats(self, tranet, batch):
        network = init_params(tranet, 0)
        forward(network, batch, TRAIN)
        assert not np.all(network.running_stats[2].mean == 0)

    def test_wrong_input_shape(self, tranet):
        with pytest.raises(ShapeMismatchError):
            forward(init_params(tranet, 0), np.zeros((1, 1, 32, 32)), INFER)

    def test_gradients_match_parameter_shapes(self, tranet, batch):
        network = init_params(tranet, 0)
        logits, cache = forward(network, batch, TRAIN)
        _, _, grad = softmax_xent(logits, [0, 1, 3])
        grads, grad_input = backward_with_input(network, cache, grad)
        assert grad_input.shape == batch.shape
        for layer, layer_grads in zip(network.params, grads):
            assert set(layer) == set(layer_grads)

    def test_cache_from_other_network_is_rejected(self, tranet, batch):
        _, cache = forward(init_params(tranet, 0), batch, TRAIN)
        other = init_params(build_network("tranet-trad"), 0)
        with pytest.raises(ShapeMismatchError):
            backward(other, cache, np.zeros((3, 4)))


class TestWholeNetworkGradients:
    def test_tiny_network(self):
        assert check_network(tiny_spec(), seed=0) <= 1e-4

    def test_lrn_dropout_network(self):
        spec = NetworkSpec(
            name="regularized", input_shape=(2, 8, 8),
            layers=[
                conv_layer(4, 3), relu_layer(), lrn_layer(), pool_layer(2, 2),
                flatten_layer(), dense_layer(6), dropout_layer(0.5), dense_layer(4), softmax_output(),
            ],
            num_classes=4,
        )
        network = init_params(spec, 3)
        rng = np.random.default_rng(3)
        errors = network_gradient_errors(network, rng.standard_normal((2, 2, 8, 8)), np.array([1, 2]), seed=9)
        assert "input" in errors
        assert max(errors.values()) <= 1e-4


# =============================================================================
# Checkpoints
# =============================================================================

class TestCheckpoint:
    @pytest.fixture
    def trained(self, tranet, batch):
        network = init_params(tranet, 4)
        forward(network, batch, TRAIN)
        return network

    def test_round_trip_is_exact(self, trained, batch, tmp_path):
        path = save_checkpoint(trained, str(tmp_path / "model.rbsc"))
        loaded = load_checkpoint(path)
        assert loaded.spec == trained.spec
        for a, b in zip(trained.params, loaded.params):
            for key in a:
                np.testing.assert_array_equal(a[key], b[key])
        np.testing.assert_array_equal(loaded.running_stats[2].mean, trained.running_stats[2].mean)
        np.testing.assert_array_equal(forward(loaded, batch, INFER)[0], forward(trained, batch, INFER)[0])
        assert checkpoint_param_count(path) == 7156

    def test_float32_round_trip(self, tranet, tmp_path):
        network = init_params(tranet, 0, np.float32)
        loaded = load_checkpoint(save_checkpoint(network, str(tmp_path / "f32.rbsc")))
        assert loaded.dtype == np.float32

    def test_bad_magic(self, trained, tmp_path):
        path = tmp_path / "model.rbsc"
        save_checkpoint(trained, str(path))
        data = bytearray(path.read_bytes())
        data[:4] = b"XXXX"
        path.write_bytes(bytes(data))
        with pytest.raises(CheckpointVersionError):
            load_checkpoint(str(path))

    def test_shorter_than_magic_is_truncated(self, tmp_path):
        path = tmp_path / "stub.rbsc"
        for stub in (b"", b"RB"):
            path.write_bytes(stub)
            with pytest.raises(CheckpointTruncatedError):
                load_checkpoint(str(path))
        path.write_bytes(b"XY")
        with pytest.raises(CheckpointVersionError):
            load_checkpoint(str(path))

    def test_unknown_version(self, trained, tmp_path):
        path = tmp_path / "model.rbsc"
        save_checkpoint(trained, str(path))
        data = bytearray(path.read_bytes())
        data[4:8] = struct.pack("<I", 99)
        path.write_bytes(bytes(data))
        with pytest.raises(CheckpointVersionError):
            load_checkpoint(str(path))

    def test_truncated_payload(self, trained, tmp_path):
        path = tmp_path / "model.rbsc"
        save_checkpoint(trained, str(path))
        path.write_bytes(path.read_bytes()[:-10])
        with pytest.raises(CheckpointTruncatedError):
            load_checkpoint(str(path))

    def test_truncated_header(self, trained, tmp_path):
        path = tmp_path / "model.rbsc"
        save_checkpoint(trained, str(path))
        path.write_bytes(path.read_bytes()[:20])
        with pytest.raises(CheckpointTruncatedError):
            load_checkpoint(str(path))

    def test_tensor_shape_mismatch(self, trained, tmp_path):
        path = tmp_path / "model.rbsc"
        save_checkpoint(trained, str(path))
        data = path.read_bytes()
        _, version, header_len = struct.unpack_from("<4sII", data)
        header = json.loads(data[12:12 + header_len])
        header["tensors"][0]["shape"] = [4, 1, 3, 3]
        raw = json.dumps(header).encode("utf-8")
        path.write_bytes(struct.pack("<4sII", b"RBSC", version, len(raw)) + raw + data[12 + header_len:])
        with pytest.raises(CheckpointShapeError):
            load_checkpoint(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_checkpoint(str(tmp_path / "absent.rbsc"))
