"""
Parameter initialization and forward/backward orchestration over a NetworkSpec.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from netdef.spec import LayerKind, NetworkSpec, buffer_shapes, infer_shapes, param_shapes
from tensor_core.activations import relu, relu_backward, sigmoid, sigmoid_backward
from tensor_core.conv import conv2d_backward, conv2d_forward
from tensor_core.dense import dense_backward, dense_forward
from tensor_core.normalization import RunningStats, batchnorm_backward, batchnorm_forward, lrn_backward, lrn_forward
from tensor_core.pooling import avgpool_backward, avgpool_forward, maxpool_backward, maxpool_forward
from tensor_core.regularization import INFER, check_mode, dropout, dropout_backward
from tensor_core.tensor import Tensor, expect_shape, flatten, unflatten
from utils.errors import InvalidParameterError, ShapeMismatchError
from utils.helpers import derive_seed

ParamGrads = List[Dict[str, np.ndarray]]


@dataclass
class Network:
    spec: NetworkSpec
    params: List[Dict[str, np.ndarray]]
    running_stats: Dict[int, RunningStats] = field(default_factory=dict)

    @property
    def dtype(self):
        for layer in self.params:
            for value in layer.values():
                return value.dtype
        return np.dtype(np.float64)

    def param_count(self) -> int:
        return int(sum(value.size for layer in self.params for value in layer.values()))

    def copy(self) -> "Network":
        params = [{key: value.copy() for key, value in layer.items()} for layer in self.params]
        stats = {
            index: RunningStats(s.mean.copy(), s.var.copy(), s.momentum)
            for index, s in self.running_stats.items()
        }
        return Network(self.spec, params, stats)


@dataclass
class ForwardCache:
    """Per-call activations kept for backward. Never shared between calls."""
    spec_name: str
    kinds: Tuple[str, ...]
    mode: str
    entries: List[Any]


# ================= INITIALIZATION =================
def _init_std(spec: NetworkSpec, index: int, fan_in: int, fan_out: int) -> float:
    """He normal when the next activation is ReLU, Glorot normal otherwise."""
    for layer in spec.layers[index + 1:]:
        if layer.kind == LayerKind.RELU:
            return float(np.sqrt(2.0 / fan_in))
        if layer.kind in (LayerKind.SIGMOID, LayerKind.CONV, LayerKind.DENSE, LayerKind.SOFTMAX_OUTPUT):
            break
    return float(np.sqrt(2.0 / (fan_in + fan_out)))


def init_params(spec: NetworkSpec, seed: int = 0, dtype=np.float64) -> Network:
    """
    Draw weights per layer from default_rng([seed, layer_index]); biases and
    BatchNorm shifts start at 0, BatchNorm scales at 1.
    """
    if seed < 0:
        raise InvalidParameterError(f"seed must be >= 0, got {seed}")
    infer_shapes(spec)

    params = []
    for index, (layer, shapes) in enumerate(zip(spec.layers, param_shapes(spec))):
        if layer.kind in (LayerKind.CONV, LayerKind.DENSE):
            weight_shape = shapes["weight"]
            if layer.kind == LayerKind.CONV:
                receptive = weight_shape[2] * weight_shape[3]
                fan_in, fan_out = weight_shape[1] * receptive, weight_shape[0] * receptive
            else:
                fan_in, fan_out = weight_shape
            std = _init_std(spec, index, fan_in, fan_out)
            rng = np.random.default_rng([seed, index])
            weight = rng.standard_normal(weight_shape) * std
            params.append({
                "weight": weight.astype(dtype),
                "bias": np.zeros(shapes["bias"], dtype=dtype),
            })
        elif layer.kind == LayerKind.BATCHNORM:
            params.append({
                "gamma": np.ones(shapes["gamma"], dtype=dtype),
                "beta": np.zeros(shapes["beta"], dtype=dtype),
            })
        else:
            params.append({})

    stats = {
        index: RunningStats.fresh(shape[0], dtype, spec.layers[index].momentum or 0.9)
        for index, shape in buffer_shapes(spec).items()
    }
    return Network(spec, params, stats)


# ================= FORWARD =================
def forward(
    network: Network,
    batch: Tensor,
    mode: str = INFER,
    seed: int = 0,
    trace: Optional[List[Tuple[int, ...]]] = None,
) -> Tuple[Tensor, ForwardCache]:
    """
    Run the layer stack on a [N, C, H, W] batch. Train mode updates BatchNorm
    running statistics and draws one dropout mask stream per (seed, layer).
    When trace is a list, the per-sample output shape of every layer is appended.
    Returns (logits [N, num_classes], cache).
    """
    check_mode(mode)
    spec = network.spec
    expect_shape(batch, (None,) + tuple(spec.input_shape), "batch")

    x = batch
    entries: List[Any] = []
    for index, (layer, params) in enumerate(zip(spec.layers, network.params)):
        kind = layer.kind
        if kind == LayerKind.CONV:
            entries.append(x)
            x = conv2d_forward(x, params["weight"], params["bias"], layer.conv)
        elif kind == LayerKind.MAXPOOL:
            x, indices = maxpool_forward(x, layer.window, layer.stride or layer.window[0])
            entries.append(indices)
        elif kind == LayerKind.AVGPOOL:
            x, geometry = avgpool_forward(x, layer.window, layer.stride or layer.window[0])
            entries.append(geometry)
        elif kind == LayerKind.RELU:
            entries.append(x)
            x = relu(x)
        elif kind == LayerKind.SIGMOID:
            x = sigmoid(x)
            entries.append(x)
        elif kind == LayerKind.LRN:
            entries.append(x)
            x = lrn_forward(x, layer.lrn)
        elif kind == LayerKind.BATCHNORM:
            x, bn_cache = batchnorm_forward(
                x, params["gamma"], params["beta"], layer.eps, mode, network.running_stats.get(index)
            )
            entries.append(bn_cache)
        elif kind == LayerKind.DROPOUT:
            x, mask = dropout(x, layer.rate, derive_seed(seed, "dropout", index), mode)
            entries.append(mask)
        elif kind == LayerKind.FLATTEN:
            entries.append(x.shape[1:])
            x = flatten(x)
        elif kind == LayerKind.DENSE:
            entries.append(x)
            x = dense_forward(x, params["weight"], params["bias"])
        else:
            entries.append(None)
        if trace is not None:
            trace.append(tuple(x.shape[1:]))

    return x, ForwardCache(spec.name, spec.kinds, mode, entries)


# ================= BACKWARD =================
def backward_with_input(
    network: Network,
    cache: ForwardCache,
    grad_logits: Tensor,
) -> Tuple[ParamGrads, Tensor]:
    spec = network.spec
    if cache.kinds != spec.kinds or cache.spec_name != spec.name or len(cache.entries) != len(spec.layers):
        raise ShapeMismatchError(
            f"Forward cache from {cache.spec_name!r} does not match network {spec.name!r}"
        )
    batch = cache.entries[0].shape[0] if isinstance(cache.entries[0], np.ndarray) else None
    expect_shape(grad_logits, (batch, spec.num_classes), "grad_logits")

    grads: ParamGrads = [{} for _ in spec.layers]
    g = grad_logits
    for index in range(len(spec.layers) - 1, -1, -1):
        layer = spec.layers[index]
        entry = cache.entries[index]
        params = network.params[index]
        kind = layer.kind
        if kind == LayerKind.CONV:
            g, gw, gb = conv2d_backward(entry, params["weight"], layer.conv, g)
            grads[index] = {"weight": gw, "bias": gb}
        elif kind == LayerKind.MAXPOOL:
            g = maxpool_backward(entry, g)
        elif kind == LayerKind.AVGPOOL:
            g = avgpool_backward(entry, g)
        elif kind == LayerKind.RELU:
            g = relu_backward(entry, g)
        elif kind == LayerKind.SIGMOID:
            g = sigmoid_backward(entry, g)
        elif kind == LayerKind.LRN:
            g = lrn_backward(entry, layer.lrn, g)
        elif kind == LayerKind.BATCHNORM:
            g, ggamma, gbeta = batchnorm_backward(entry, g)
            grads[index] = {"gamma": ggamma, "beta": gbeta}
        elif kind == LayerKind.DROPOUT:
            g = dropout_backward(entry, layer.rate, g)
        elif kind == LayerKind.FLATTEN:
            g = unflatten(g, entry)
        elif kind == LayerKind.DENSE:
            g, gw, gb = dense_backward(entry, params["weight"], g)
            grads[index] = {"weight": gw, "bias": gb}
    return grads, g


def backward(network: Network, cache: ForwardCache, grad_logits: Tensor) -> ParamGrads:
    """Gradients for every parameter, shaped like network.params."""
    return backward_with_input(network, cache, grad_logits)[0]

