"""
Central finite-difference checks for every layer primitive.

Each check draws small random configurations, forms the scalar
L = sum(G * layer(x)) for a fixed random G, and compares the hand-written
backward pass against numerical derivatives in float64.
"""
from typing import Callable, Dict

import numpy as np

from config.config import GRADCHECK_STEP
from tensor_core.activations import relu, relu_backward, sigmoid, sigmoid_backward
from tensor_core.conv import conv2d_backward, conv2d_forward
from tensor_core.dense import dense_backward, dense_forward
from tensor_core.loss import softmax_xent
from tensor_core.normalization import batchnorm_backward, batchnorm_forward, lrn_backward, lrn_forward
from tensor_core.params import ConvParams, LrnParams
from tensor_core.pooling import avgpool_backward, avgpool_forward, maxpool_backward, maxpool_forward
from tensor_core.regularization import dropout, dropout_backward
from tensor_core.tensor import flatten, unflatten


def numerical_gradient(f: Callable[[], float], x: np.ndarray, eps: float = GRADCHECK_STEP) -> np.ndarray:
    """
    Central differences of f() w.r.t. every entry of x. x is perturbed in place
    and restored; f must read x.
    """
    grad = np.zeros(x.shape, dtype=np.float64)
    flat = x.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + eps
        plus = f()
        flat[i] = original - eps
        minus = f()
        flat[i] = original
        out[i] = (plus - minus) / (2.0 * eps)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Largest absolute deviation scaled by the largest gradient magnitude."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = max(np.abs(analytic).max(initial=0.0), np.abs(numeric).max(initial=0.0), 1e-8)
    return float(np.abs(analytic - numeric).max(initial=0.0) / scale)


def _worst(pairs) -> float:
    return max(relative_error(a, n) for a, n in pairs)


# ================= PER-LAYER CHECKS =================
def check_conv(rng: np.random.Generator) -> float:
    k = int(rng.integers(1, 4))
    params = ConvParams(
        out_channels=int(rng.integers(1, 3)), kernel_h=k, kernel_w=k,
        stride=int(rng.integers(1, 3)), padding=int(rng.integers(0, 2)),
    )
    x = rng.standard_normal((int(rng.integers(1, 3)), int(rng.integers(1, 3)),
                             int(rng.integers(k, 7)), int(rng.integers(k, 7))))
    w = rng.standard_normal((params.out_channels, x.shape[1], k, k))
    b = rng.standard_normal(params.out_channels)
    g = rng.standard_normal(conv2d_forward(x, w, b, params).shape)

    def loss():
        return float((g * conv2d_forward(x, w, b, params)).sum())

    gx, gw, gb = conv2d_backward(x, w, params, g)
    return _worst([(gx, numerical_gradient(loss, x)),
                   (gw, numerical_gradient(loss, w)),
                   (gb, numerical_gradient(loss, b))])


def _pool_input(rng):
    return rng.standard_normal((int(rng.integers(1, 3)), int(rng.integers(1, 3)),
                                int(rng.integers(3, 8)), int(rng.integers(3, 8))))


def check_maxpool(rng: np.random.Generator) -> float:
    x = _pool_input(rng)
    window = (int(rng.integers(1, 4)), int(rng.integers(1, 4)))
    stride = int(rng.integers(1, 3))
    out, idx = maxpool_forward(x, window, stride)
    g = rng.standard_normal(out.shape)

    def loss():
        return float((g * maxpool_forward(x, window, stride)[0]).sum())

    return relative_error(maxpool_backward(idx, g), numerical_gradient(loss, x))


def check_avgpool(rng: np.random.Generator) -> float:
    x = _pool_input(rng)
    window = (int(rng.integers(1, 4)), int(rng.integers(1, 4)))
    stride = int(rng.integers(1, 3))
    out, geometry = avgpool_forward(x, window, stride)
    g = rng.standard_normal(out.shape)

    def loss():
        return float((g * avgpool_forward(x, window, stride)[0]).sum())

    return relative_error(avgpool_backward(geometry, g), numerical_gradient(loss, x))


def check_relu(rng: np.random.Generator) -> float:
    magnitude = rng.uniform(1e-2, 2.0, size=(2, 3, 4))
    x = magnitude * rng.choice([-1.0, 1.0], size=magnitude.shape)
    g = rng.standard_normal(x.shape)

    def loss():
        return float((g * relu(x)).sum())

    return relative_error(relu_backward(x, g), numerical_gradient(loss, x))


def check_sigmoid(rng: np.random.Generator) -> float:
    x = rng.standard_normal((2, 3, 4)) * 2.0
    g = rng.standard_normal(x.shape)

    def loss():
        return float((g * sigmoid(x)).sum())

    return relative_error(sigmoid_backward(sigmoid(x), g), numerical_gradient(loss, x))


def check_lrn(rng: np.random.Generator) -> float:
    x = rng.standard_normal((1, 6, 2, 2))
    params = LrnParams(depth_radius=int(rng.choice([3, 5])), k=2.0,
                       alpha=float(rng.uniform(1e-4, 0.5)), beta=0.75)
    g = rng.standard_normal(x.shape)

    def loss():
        return float((g * lrn_forward(x, params)).sum())

    return relative_error(lrn_backward(x, params, g), numerical_gradient(loss, x))


def check_batchnorm(rng: np.random.Generator) -> float:
    x = rng.standard_normal((int(rng.integers(2, 4)), 3, 3, 3))
    gamma = rng.uniform(0.5, 1.5, size=3)
    beta = rng.standard_normal(3)
    g = rng.standard_normal(x.shape)

    def loss():
        return float((g * batchnorm_forward(x, gamma, beta, 1e-5, "train")[0]).sum())

    _, cache = batchnorm_forward(x, gamma, beta, 1e-5, "train")
    gx, ggamma, gbeta = batchnorm_backward(cache, g)
    return _worst([(gx, numerical_gradient(loss, x)),
                   (ggamma, numerical_gradient(loss, gamma)),
                   (gbeta, numerical_gradient(loss, beta))])


def check_dropout(rng: np.random.Generator) -> float:
    x = rng.standard_normal((3, 5))
    seed = int(rng.integers(0, 2**31))
    g = rng.standard_normal(x.shape)

    def loss():
        return float((g * dropout(x, 0.5, seed, "train")[0]).sum())

    _, mask = dropout(x, 0.5, seed, "train")
    return relative_error(dropout_backward(mask, 0.5, g), numerical_gradient(loss, x))


def check_flatten(rng: np.random.Generator) -> float:
    x = rng.standard_normal((2, 3, 2, 2))
    g = rng.standard_normal((2, 12))

    def loss():
        return float((g * flatten(x)).sum())

    return relative_error(unflatten(g, x.shape[1:]), numerical_gradient(loss, x))


def check_dense(rng: np.random.Generator) -> float:
    x = rng.standard_normal((int(rng.integers(1, 4)), int(rng.integers(1, 6))))
    w = rng.standard_normal((x.shape[1], int(rng.integers(1, 5))))
    b = rng.standard_normal(w.shape[1])
    g = rng.standard_normal((x.shape[0], w.shape[1]))

    def loss():
        return float((g * dense_forward(x, w, b)).sum())

    gx, gw, gb = dense_backward(x, w, g)
    return _worst([(gx, numerical_gradient(loss, x)),
                   (gw, numerical_gradient(loss, w)),
                   (gb, numerical_gradient(loss, b))])


def check_softmax_xent(rng: np.random.Generator) -> float:
    logits = rng.standard_normal((int(rng.integers(1, 5)), 4)) * 2.0
    labels = rng.integers(0, 4, size=logits.shape[0])

    def loss():
        return softmax_xent(logits, labels)[0]

    return relative_error(softmax_xent(logits, labels)[2], numerical_gradient(loss, logits))


LAYER_CHECKS: Dict[str, Callable[[np.random.Generator], float]] = {
    "Conv": check_conv,
    "MaxPool": check_maxpool,
    "AvgPool": check_avgpool,
    "ReLU": check_relu,
    "Sigmoid": check_sigmoid,
    "LRN": check_lrn,
    "BatchNorm": check_batchnorm,
    "Dropout": check_dropout,
    "Flatten": check_flatten,
    "Dense": check_dense,
    "SoftmaxOutput": check_softmax_xent,
}


def run_layer_checks(seed: int = 0, configs: int = 20) -> Dict[str, float]:
    """Max relative error per layer kind over `configs` random configurations each."""
    report = {}
    for offset, (kind, check) in enumerate(LAYER_CHECKS.items()):
        rng = np.random.default_rng([seed, offset])
        report[kind] = max(check(rng) for _ in range(configs))
    return report
