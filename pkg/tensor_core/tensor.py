"""
Dense tensors are plain numpy arrays: row-major, last axis fastest, at most 4 axes.
Images use the (batch, channel, height, width) layout.
"""
from typing import Sequence

import numpy as np

from utils.errors import InvalidParameterError, ShapeMismatchError

Tensor = np.ndarray

WIDE = np.float64
NARROW = np.float32
MAX_RANK = 4


def as_tensor(data, dtype=WIDE) -> Tensor:
    """
    Convert to a contiguous array of the requested float dtype and check the
    tensor invariants (rank <= 4, every extent >= 1).
    """
    array = np.ascontiguousarray(data, dtype=dtype)
    if array.ndim == 0 or array.ndim > MAX_RANK:
        raise InvalidParameterError(f"Tensors have 1 to {MAX_RANK} axes, got {array.ndim}")
    for axis, extent in enumerate(array.shape):
        if extent < 1:
            raise InvalidParameterError(f"Extent of axis {axis} must be >= 1, got {extent}")
    return array


def zeros(shape: Sequence[int], dtype=WIDE) -> Tensor:
    return np.zeros(tuple(shape), dtype=dtype)


def expect_rank(x: Tensor, rank: int, name: str):
    if x.ndim != rank:
        raise ShapeMismatchError(f"{name} must have {rank} axes, got shape {tuple(x.shape)}")


def expect_shape(x: Tensor, shape: Sequence[int], name: str):
    """Compare axis by axis so the diagnostic names the first offending axis."""
    shape = tuple(shape)
    if x.ndim != len(shape):
        raise ShapeMismatchError(
            f"{name} must have {len(shape)} axes, got shape {tuple(x.shape)}"
        )
    for axis, (got, want) in enumerate(zip(x.shape, shape)):
        if want is not None and got != want:
            raise ShapeMismatchError(
                f"{name} axis {axis} has extent {got}, expected {want}"
            )


def flatten(x: Tensor) -> Tensor:
    """[N, C, H, W] -> [N, C*H*W], channel-major."""
    return x.reshape(x.shape[0], -1)


def unflatten(x: Tensor, shape: Sequence[int]) -> Tensor:
    """Inverse of flatten for a per-sample shape (C, H, W)."""
    return x.reshape((x.shape[0],) + tuple(shape))
