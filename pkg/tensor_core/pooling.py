"""
Max and average pooling with floor semantics: trailing rows/cols that do not
fill a window are dropped.
"""
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from tensor_core.tensor import Tensor, expect_rank
from utils.errors import InvalidParameterError, ShapeMismatchError

Window = Union[int, Tuple[int, int]]


@dataclass(frozen=True)
class PoolIndices:
    """Argmax positions (flat index into each H*W plane) from a max-pool forward."""
    indices: np.ndarray
    input_shape: Tuple[int, int, int, int]


@dataclass(frozen=True)
class PoolGeometry:
    input_shape: Tuple[int, int, int, int]
    window: Tuple[int, int]
    stride: int


def _as_window(window: Window) -> Tuple[int, int]:
    if isinstance(window, int):
        return window, window
    return int(window[0]), int(window[1])


def pool_output_hw(height: int, width: int, window: Window, stride: int):
    ph, pw = _as_window(window)
    if stride < 1:
        raise InvalidParameterError(f"Pool stride must be >= 1, got {stride}")
    if ph < 1 or pw < 1:
        raise InvalidParameterError(f"Pool window must be >= 1, got {ph}x{pw}")
    if ph > height or pw > width:
        raise ShapeMismatchError(
            f"Pool window {ph}x{pw} is larger than input {height}x{width}"
        )
    return (height - ph) // stride + 1, (width - pw) // stride + 1


def _windows(input: Tensor, window: Tuple[int, int], stride: int):
    expect_rank(input, 4, "input")
    out_h, out_w = pool_output_hw(input.shape[2], input.shape[3], window, stride)
    view = sliding_window_view(input, window, axis=(2, 3))
    view = view[:, :, ::stride, ::stride][:, :, :out_h, :out_w]
    return view, out_h, out_w


# ================= MAX POOLING =================
def maxpool_forward(input: Tensor, window: Window, stride: int) -> Tuple[Tensor, PoolIndices]:
    ph, pw = _as_window(window)
    view, out_h, out_w = _windows(input, (ph, pw), stride)
    n, c, _, w = input.shape
    flat = view.reshape(n, c, out_h, out_w, ph * pw)

    # argmax returns the first maximum: lowest linear index wins ties
    local = np.argmax(flat, axis=-1)
    output = np.take_along_axis(flat, local[..., None], axis=-1)[..., 0]

    rows = np.arange(out_h)[:, None] * stride + local // pw
    cols = np.arange(out_w)[None, :] * stride + local % pw
    indices = PoolIndices(indices=rows * w + cols, input_shape=tuple(input.shape))
    return np.ascontiguousarray(output), indices


def maxpool_backward(indices: PoolIndices, grad_out: Tensor) -> Tensor:
    n, c, h, w = indices.input_shape
    if grad_out.shape != indices.indices.shape:
        raise ShapeMismatchError(
            f"grad_out shape {tuple(grad_out.shape)} does not match pooling indices "
            f"{tuple(indices.indices.shape)}"
        )
    plane_offset = (np.arange(n * c) * (h * w)).reshape(n, c, 1, 1)
    flat = (indices.indices + plane_offset).ravel()
    grad = np.bincount(flat, weights=grad_out.ravel(), minlength=n * c * h * w)
    return grad.reshape(n, c, h, w).astype(grad_out.dtype, copy=False)


# ================= AVERAGE POOLING =================
def avgpool_forward(input: Tensor, window: Window, stride: int) -> Tuple[Tensor, PoolGeometry]:
    ph, pw = _as_window(window)
    view, _, _ = _windows(input, (ph, pw), stride)
    output = view.mean(axis=(-2, -1))
    return np.ascontiguousarray(output), PoolGeometry(tuple(input.shape), (ph, pw), stride)


def avgpool_backward(geometry: PoolGeometry, grad_out: Tensor) -> Tensor:
    n, c, h, w = geometry.input_shape
    ph, pw = geometry.window
    s = geometry.stride
    out_h, out_w = pool_output_hw(h, w, (ph, pw), s)
    if grad_out.shape != (n, c, out_h, out_w):
        raise ShapeMismatchError(
            f"grad_out shape {tuple(grad_out.shape)} does not match pooled shape "
            f"{(n, c, out_h, out_w)}"
        )
    grad = np.zeros((n, c, h, w), dtype=grad_out.dtype)
    share = grad_out / (ph * pw)
    y_end = s * (out_h - 1) + 1
    x_end = s * (out_w - 1) + 1
    for dy in range(ph):
        for dx in range(pw):
            grad[:, :, dy:dy + y_end:s, dx:dx + x_end:s] += share
    return grad
