"""
Naive nested-loop oracles for the vectorized kernels. Slow on purpose; used by
tests and the gradient-check command only.
"""
import numpy as np

from tensor_core.params import ConvParams, LrnParams


def conv2d_naive(input, weights, bias, params: ConvParams):
    n, cin, h, w = input.shape
    cout = params.out_channels
    kh, kw, s, p = params.kernel_h, params.kernel_w, params.stride, params.padding
    out_h, out_w = params.output_hw(h, w)
    out = np.zeros((n, cout, out_h, out_w), dtype=np.float64)
    for b in range(n):
        for co in range(cout):
            for y in range(out_h):
                for x in range(out_w):
                    acc = 0.0 if bias is None else float(bias[co])
                    for ci in range(cin):
                        for dy in range(kh):
                            for dx in range(kw):
                                iy = y * s + dy - p
                                ix = x * s + dx - p
                                if 0 <= iy < h and 0 <= ix < w:
                                    acc += input[b, ci, iy, ix] * weights[co, ci, dy, dx]
                    out[b, co, y, x] = acc
    return out


def maxpool_naive(input, window, stride):
    ph, pw = window
    n, c, h, w = input.shape
    out_h = (h - ph) // stride + 1
    out_w = (w - pw) // stride + 1
    out = np.zeros((n, c, out_h, out_w), dtype=np.float64)
    for b in range(n):
        for ch in range(c):
            for y in range(out_h):
                for x in range(out_w):
                    best = -np.inf
                    for dy in range(ph):
                        for dx in range(pw):
                            best = max(best, input[b, ch, y * stride + dy, x * stride + dx])
                    out[b, ch, y, x] = best
    return out


def avgpool_naive(input, window, stride):
    ph, pw = window
    n, c, h, w = input.shape
    out_h = (h - ph) // stride + 1
    out_w = (w - pw) // stride + 1
    out = np.zeros((n, c, out_h, out_w), dtype=np.float64)
    for b in range(n):
        for ch in range(c):
            for y in range(out_h):
                for x in range(out_w):
                    total = 0.0
                    for dy in range(ph):
                        for dx in range(pw):
                            total += input[b, ch, y * stride + dy, x * stride + dx]
                    out[b, ch, y, x] = total / (ph * pw)
    return out


def lrn_naive(input, params: LrnParams):
    n, c = input.shape[:2]
    half = params.half_width
    out = np.zeros_like(input, dtype=np.float64)
    for b in range(n):
        for ch in range(c):
            acc = np.zeros(input.shape[2:], dtype=np.float64)
            for other in range(max(0, ch - half), min(c, ch + half + 1)):
                acc += input[b, other] ** 2
            out[b, ch] = input[b, ch] / (params.k + params.alpha * acc) ** params.beta
    return out


def resize_naive(image, target):
    c, h, w = image.shape
    out_h, out_w = target
    out = np.zeros((c, out_h, out_w), dtype=np.float64)
    for i in range(out_h):
        y = 0.0 if out_h == 1 or h == 1 else i * (h - 1) / (out_h - 1)
        y0 = min(int(np.floor(y)), h - 1)
        y1 = min(y0 + 1, h - 1)
        fy = y - y0
        for j in range(out_w):
            x = 0.0 if out_w == 1 or w == 1 else j * (w - 1) / (out_w - 1)
            x0 = min(int(np.floor(x)), w - 1)
            x1 = min(x0 + 1, w - 1)
            fx = x - x0
            out[:, i, j] = (
                (1 - fy) * (1 - fx) * image[:, y0, x0]
                + (1 - fy) * fx * image[:, y0, x1]
                + fy * (1 - fx) * image[:, y1, x0]
                + fy * fx * image[:, y1, x1]
            )
    return out
