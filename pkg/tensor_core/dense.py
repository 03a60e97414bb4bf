from typing import Tuple

from tensor_core.tensor import Tensor, expect_rank, expect_shape
from utils.errors import ShapeMismatchError


def _check(input: Tensor, weights: Tensor, bias: Tensor):
    expect_rank(input, 2, "input")
    expect_rank(weights, 2, "weights")
    if input.shape[1] != weights.shape[0]:
        raise ShapeMismatchError(
            f"Inner dimension mismatch: input has {input.shape[1]} features, "
            f"weights expect {weights.shape[0]}"
        )
    expect_shape(bias, (weights.shape[1],), "bias")


def dense_forward(input: Tensor, weights: Tensor, bias: Tensor) -> Tensor:
    """[N, D] @ [D, M] + [M] -> [N, M]"""
    _check(input, weights, bias)
    return input @ weights + bias


def dense_backward(input: Tensor, weights: Tensor, grad_out: Tensor) -> Tuple[Tensor, Tensor, Tensor]:
    expect_rank(grad_out, 2, "grad_out")
    if grad_out.shape != (input.shape[0], weights.shape[1]):
        raise ShapeMismatchError(
            f"grad_out shape {tuple(grad_out.shape)} does not match dense output "
            f"{(input.shape[0], weights.shape[1])}"
        )
    grad_input = grad_out @ weights.T
    grad_weights = input.T @ grad_out
    grad_bias = grad_out.sum(axis=0)
    return grad_input, grad_weights, grad_bias
