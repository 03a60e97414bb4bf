from typing import Tuple

import numpy as np

from tensor_core.tensor import Tensor
from utils.errors import InvalidParameterError, ShapeMismatchError

TRAIN = "train"
INFER = "infer"


def check_mode(mode: str):
    if mode not in (TRAIN, INFER):
        raise InvalidParameterError(f"mode must be '{TRAIN}' or '{INFER}', got {mode!r}")


def dropout(input: Tensor, rate: float = 0.5, rng_seed: int = 0, mode: str = TRAIN) -> Tuple[Tensor, Tensor]:
    """
    Inverted dropout. Returns (output, mask) where mask holds 0/1 keep flags.
    In infer mode the output is the input and the mask is all ones.
    """
    if not 0.0 <= rate < 1.0:
        raise InvalidParameterError(f"Dropout rate must lie in [0, 1), got {rate}")
    check_mode(mode)

    if mode == INFER or rate == 0.0:
        return input.copy(), np.ones_like(input)

    rng = np.random.default_rng(rng_seed)
    mask = (rng.random(input.shape) >= rate).astype(input.dtype)
    return input * mask / (1.0 - rate), mask


def dropout_backward(mask: Tensor, rate: float, grad_out: Tensor) -> Tensor:
    if mask.shape != grad_out.shape:
        raise ShapeMismatchError(
            f"grad_out shape {tuple(grad_out.shape)} does not match dropout mask {tuple(mask.shape)}"
        )
    return grad_out * mask / (1.0 - rate)
