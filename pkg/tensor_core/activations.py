import numpy as np

from tensor_core.tensor import Tensor
from utils.errors import ShapeMismatchError


def _same_shape(a: Tensor, b: Tensor):
    if a.shape != b.shape:
        raise ShapeMismatchError(
            f"grad_out shape {tuple(b.shape)} does not match activation shape {tuple(a.shape)}"
        )


def relu(input: Tensor) -> Tensor:
    return np.maximum(input, 0)


def relu_backward(input: Tensor, grad_out: Tensor) -> Tensor:
    # subgradient at 0 is 0
    _same_shape(input, grad_out)
    return grad_out * (input > 0)


def sigmoid(input: Tensor) -> Tensor:
    # tanh form never overflows
    return 0.5 * (1.0 + np.tanh(0.5 * input))


def sigmoid_backward(output: Tensor, grad_out: Tensor) -> Tensor:
    """Takes the forward *output* y; dy/dx = y(1 - y)."""
    _same_shape(output, grad_out)
    return grad_out * output * (1.0 - output)
