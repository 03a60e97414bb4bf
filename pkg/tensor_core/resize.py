from typing import Tuple

import numpy as np

from tensor_core.tensor import Tensor, expect_rank
from utils.errors import InvalidParameterError


def _sample_grid(source: int, target: int):
    """Corner-aligned sample positions: first and last pixels map onto each other."""
    if target == 1 or source == 1:
        pos = np.zeros(target)
    else:
        pos = np.arange(target) * (source - 1) / (target - 1)
    low = np.floor(pos).astype(np.int64)
    low = np.minimum(low, source - 1)
    high = np.minimum(low + 1, source - 1)
    frac = pos - low
    return low, high, frac


def resize_bilinear(image: Tensor, target: Tuple[int, int]) -> Tensor:
    """
    Bilinear resize of a [C, H, W] image to [C, H', W'] with corner-aligned grids.
    """
    image = np.asarray(image)
    if not np.issubdtype(image.dtype, np.floating):
        image = image.astype(np.float64)
    expect_rank(image, 3, "image")
    out_h, out_w = int(target[0]), int(target[1])
    if out_h < 1 or out_w < 1:
        raise InvalidParameterError(f"Resize target must be >= 1x1, got {out_h}x{out_w}")

    _, h, w = image.shape
    y0, y1, wy = _sample_grid(h, out_h)
    x0, x1, wx = _sample_grid(w, out_w)

    wy = wy.astype(image.dtype)[None, :, None]
    rows = (1 - wy) * image[:, y0, :] + wy * image[:, y1, :]
    wx = wx.astype(image.dtype)[None, None, :]
    return (1 - wx) * rows[:, :, x0] + wx * rows[:, :, x1]
