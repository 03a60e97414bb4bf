"""
Local response normalization (across channels) and batch normalization.
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from tensor_core.params import LrnParams
from tensor_core.regularization import INFER, TRAIN, check_mode
from tensor_core.tensor import Tensor
from utils.errors import InvalidParameterError, ShapeMismatchError


# ================= LOCAL RESPONSE NORMALIZATION =================
def _channel_window_sum(x: Tensor, half: int) -> Tensor:
    """out[:, c] = sum of x[:, c'] for c' in [c - half, c + half] clipped to valid channels."""
    channels = x.shape[1]
    out = np.zeros_like(x)
    for offset in range(-half, half + 1):
        lo = max(0, -offset)
        hi = min(channels, channels - offset)
        if lo < hi:
            out[:, lo:hi] += x[:, lo + offset:hi + offset]
    return out


def _lrn_scale(input: Tensor, params: LrnParams) -> Tensor:
    if input.ndim < 2:
        raise ShapeMismatchError(f"LRN needs a channel axis, got shape {tuple(input.shape)}")
    return params.k + params.alpha * _channel_window_sum(input * input, params.half_width)


def lrn_forward(input: Tensor, params: LrnParams) -> Tensor:
    scale = _lrn_scale(input, params)
    return input * scale ** (-params.beta)


def lrn_backward(input: Tensor, params: LrnParams, grad_out: Tensor) -> Tensor:
    if grad_out.shape != input.shape:
        raise ShapeMismatchError(
            f"grad_out shape {tuple(grad_out.shape)} does not match LRN input {tuple(input.shape)}"
        )
    scale = _lrn_scale(input, params)
    # channel windows are symmetric, so the transposed window sum is the same window sum
    carried = grad_out * input * scale ** (-params.beta - 1.0)
    spread = _channel_window_sum(carried, params.half_width)
    return grad_out * scale ** (-params.beta) - 2.0 * params.alpha * params.beta * input * spread


# ================= BATCH NORMALIZATION =================
@dataclass
class RunningStats:
    """Per-channel running mean/variance. Single writer: the training loop."""
    mean: np.ndarray
    var: np.ndarray
    momentum: float = 0.9

    @classmethod
    def fresh(cls, channels: int, dtype=np.float64, momentum: float = 0.9) -> "RunningStats":
        return cls(np.zeros(channels, dtype=dtype), np.ones(channels, dtype=dtype), momentum)


@dataclass(frozen=True)
class BatchNormCache:
    xhat: Tensor
    inv_std: Tensor
    gamma: Tensor
    mode: str


def _axes_and_shape(input: Tensor):
    if input.ndim == 4:
        return (0, 2, 3), (1, input.shape[1], 1, 1)
    if input.ndim == 2:
        return (0,), (1, input.shape[1])
    raise ShapeMismatchError(f"BatchNorm expects 2 or 4 axes, got shape {tuple(input.shape)}")


def batchnorm_forward(
    input: Tensor,
    gamma: Tensor,
    beta_shift: Tensor,
    eps: float = 1e-5,
    mode: str = TRAIN,
    running_stats: Optional[RunningStats] = None,
) -> Tuple[Tensor, BatchNormCache]:
    check_mode(mode)
    axes, bshape = _axes_and_shape(input)
    channels = input.shape[1]
    if gamma.shape != (channels,) or beta_shift.shape != (channels,):
        raise ShapeMismatchError(
            f"gamma/beta must have shape ({channels},), got {tuple(gamma.shape)} and "
            f"{tuple(beta_shift.shape)}"
        )

    if mode == TRAIN:
        if input.shape[0] == 0:
            raise InvalidParameterError("BatchNorm in train mode needs a non-empty batch")
        mean = input.mean(axis=axes)
        var = input.var(axis=axes)
        if running_stats is not None:
            m = running_stats.momentum
            running_stats.mean[...] = m * running_stats.mean + (1.0 - m) * mean
            running_stats.var[...] = m * running_stats.var + (1.0 - m) * var
    else:
        if running_stats is None:
            raise InvalidParameterError("BatchNorm in infer mode needs running statistics")
        mean = running_stats.mean
        var = running_stats.var

    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (input - mean.reshape(bshape)) * inv_std.reshape(bshape)
    output = gamma.reshape(bshape) * xhat + beta_shift.reshape(bshape)
    return output, BatchNormCache(xhat=xhat, inv_std=inv_std, gamma=gamma, mode=mode)


def batchnorm_backward(cache: BatchNormCache, grad_out: Tensor) -> Tuple[Tensor, Tensor, Tensor]:
    """Returns (grad_input, grad_gamma, grad_beta_shift)."""
    if grad_out.shape != cache.xhat.shape:
        raise ShapeMismatchError(
            f"grad_out shape {tuple(grad_out.shape)} does not match BatchNorm output "
            f"{tuple(cache.xhat.shape)}"
        )
    axes, bshape = _axes_and_shape(grad_out)
    xhat = cache.xhat
    grad_gamma = (grad_out * xhat).sum(axis=axes)
    grad_beta = grad_out.sum(axis=axes)

    dxhat = grad_out * cache.gamma.reshape(bshape)
    inv_std = cache.inv_std.reshape(bshape)
    if cache.mode == INFER:
        return dxhat * inv_std, grad_gamma, grad_beta

    count = grad_out.size // grad_out.shape[1]
    grad_input = (inv_std / count) * (
        count * dxhat
        - dxhat.sum(axis=axes, keepdims=True)
        - xhat * (dxhat * xhat).sum(axis=axes, keepdims=True)
    )
    return grad_input, grad_gamma, grad_beta
