"""
2-D convolution via im2col + matrix multiply.

Patches are gathered with a strided window view so the product runs through BLAS;
the gradient w.r.t. the input is scattered back with one strided add per kernel tap.
"""
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from tensor_core.params import ConvParams
from tensor_core.state import get_num_threads, parallel_enabled
from tensor_core.tensor import Tensor, expect_rank, expect_shape


def _pad(x: Tensor, padding: int) -> Tensor:
    if padding == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))


def _check(input: Tensor, weights: Tensor, bias: Optional[Tensor], params: ConvParams):
    expect_rank(input, 4, "input")
    expect_rank(weights, 4, "weights")
    cin = input.shape[1]
    expect_shape(
        weights, (params.out_channels, cin, params.kernel_h, params.kernel_w), "weights"
    )
    if bias is not None:
        expect_shape(bias, (params.out_channels,), "bias")
    return params.output_hw(input.shape[2], input.shape[3])


def im2col(x_padded: Tensor, params: ConvParams, out_h: int, out_w: int) -> Tensor:
    """
    [N, C, Hp, Wp] -> [N*Ho*Wo, C*kh*kw]; row order (n, y, x), column order (c, dy, dx).
    """
    n, c = x_padded.shape[:2]
    kh, kw, s = params.kernel_h, params.kernel_w, params.stride
    windows = sliding_window_view(x_padded, (kh, kw), axis=(2, 3))
    windows = windows[:, :, ::s, ::s][:, :, :out_h, :out_w]
    return windows.transpose(0, 2, 3, 1, 4, 5).reshape(n * out_h * out_w, c * kh * kw)


def _chunks(n: int):
    if not parallel_enabled() or n < 2:
        return [slice(0, n)]
    parts = min(get_num_threads(), n)
    bounds = np.linspace(0, n, parts + 1).astype(int)
    return [slice(bounds[i], bounds[i + 1]) for i in range(parts)]


def _map_chunks(fn, chunks):
    if len(chunks) == 1:
        return [fn(chunks[0])]
    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        return list(pool.map(fn, chunks))


# ================= FORWARD =================
def conv2d_forward(
    input: Tensor, weights: Tensor, bias: Optional[Tensor], params: ConvParams
) -> Tensor:
    out_h, out_w = _check(input, weights, bias, params)
    w_mat = weights.reshape(params.out_channels, -1)

    def run(part: slice) -> Tensor:
        x = input[part]
        cols = im2col(_pad(x, params.padding), params, out_h, out_w)
        out = cols @ w_mat.T
        if bias is not None:
            out = out + bias
        return out.reshape(x.shape[0], out_h, out_w, params.out_channels).transpose(0, 3, 1, 2)

    pieces = _map_chunks(run, _chunks(input.shape[0]))
    return np.ascontiguousarray(np.concatenate(pieces, axis=0))


# ================= BACKWARD =================
def conv2d_backward(
    input: Tensor, weights: Tensor, params: ConvParams, grad_out: Tensor
) -> Tuple[Tensor, Tensor, Tensor]:
    """
    Gradients of sum(grad_out * conv2d_forward(input, weights, bias)) w.r.t.
    input, weights and bias.
    """
    out_h, out_w = _check(input, weights, None, params)
    n, cin, h, w = input.shape
    expect_shape(grad_out, (n, params.out_channels, out_h, out_w), "grad_out")

    kh, kw, s, p = params.kernel_h, params.kernel_w, params.stride, params.padding
    w_mat = weights.reshape(params.out_channels, -1)
    dtype = np.result_type(input, weights, grad_out)

    def run(part: slice):
        x = input[part]
        g = grad_out[part]
        count = x.shape[0]
        cols = im2col(_pad(x, p), params, out_h, out_w)
        g_mat = g.transpose(0, 2, 3, 1).reshape(-1, params.out_channels)
        grad_w = (g_mat.T @ cols).reshape(weights.shape)

        dcols = (g_mat @ w_mat).reshape(count, out_h, out_w, cin, kh, kw)
        grad_pad = np.zeros((count, cin, h + 2 * p, w + 2 * p), dtype=dtype)
        y_end = s * (out_h - 1) + 1
        x_end = s * (out_w - 1) + 1
        for dy in range(kh):
            for dx in range(kw):
                grad_pad[:, :, dy:dy + y_end:s, dx:dx + x_end:s] += (
                    dcols[:, :, :, :, dy, dx].transpose(0, 3, 1, 2)
                )
        return grad_pad[:, :, p:p + h, p:p + w], grad_w

    results = _map_chunks(run, _chunks(n))
    grad_input = np.ascontiguousarray(np.concatenate([r[0] for r in results], axis=0))
    grad_weights = results[0][1]
    for _, partial in results[1:]:
        grad_weights = grad_weights + partial
    grad_bias = grad_out.sum(axis=(0, 2, 3))
    return grad_input, grad_weights, grad_bias
