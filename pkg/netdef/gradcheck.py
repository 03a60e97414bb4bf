"""
Whole-network finite-difference check: softmax cross-entropy of a forward pass
in train mode with a fixed dropout seed, differentiated numerically with
respect to every parameter tensor and the input batch.
"""
from typing import Dict, Optional, Tuple

import numpy as np

from config.config import GRADCHECK_STEP, NUM_CLASSES
from netdef.network import Network, backward_with_input, forward, init_params
from netdef.spec import (
    NetworkSpec,
    batchnorm_layer,
    conv_layer,
    dense_layer,
    flatten_layer,
    pool_layer,
    relu_layer,
    sigmoid_layer,
    softmax_output,
)
from tensor_core.gradcheck import numerical_gradient, relative_error
from tensor_core.loss import softmax_xent
from tensor_core.regularization import TRAIN


def tiny_spec(input_hw: Tuple[int, int] = (8, 8), num_classes: int = NUM_CLASSES) -> NetworkSpec:
    """Two convolutions on an 8x8 gray input."""
    layers = [
        conv_layer(2, 3), relu_layer(), batchnorm_layer(),
        pool_layer(2, 2),
        conv_layer(3, 2), sigmoid_layer(),
        flatten_layer(), dense_layer(num_classes), softmax_output(),
    ]
    return NetworkSpec(name="tiny", input_shape=(1,) + tuple(input_hw), layers=layers, num_classes=num_classes)


def network_gradient_errors(
    network: Network,
    batch: np.ndarray,
    labels: np.ndarray,
    seed: int = 0,
    eps: float = GRADCHECK_STEP,
) -> Dict[str, float]:
    """Relative error per parameter tensor ('layers.<i>.<key>') and for the input."""

    def loss():
        logits, _ = forward(network, batch, TRAIN, seed)
        return softmax_xent(logits, labels)[0]

    logits, cache = forward(network, batch, TRAIN, seed)
    _, _, grad_logits = softmax_xent(logits, labels)
    grads, grad_input = backward_with_input(network, cache, grad_logits)

    errors = {}
    for index, layer in enumerate(network.params):
        for key, value in layer.items():
            errors[f"layers.{index}.{key}"] = relative_error(grads[index][key], numerical_gradient(loss, value, eps))
    errors["input"] = relative_error(grad_input, numerical_gradient(loss, batch, eps))
    return errors


def check_network(spec: Optional[NetworkSpec] = None, seed: int = 0, batch_size: int = 2) -> float:
    """Worst relative error over a float64 network built from spec (tiny_spec by default)."""
    spec = spec or tiny_spec()
    network = init_params(spec, seed, np.float64)
    rng = np.random.default_rng([seed, 99])
    batch = rng.standard_normal((batch_size,) + tuple(spec.input_shape))
    labels = rng.integers(0, spec.num_classes, size=batch_size)
    return max(network_gradient_errors(network, batch, labels, seed).values())
