from typing import Tuple

import numpy as np

from tensor_core.tensor import Tensor, expect_rank
from utils.errors import InvalidParameterError, ShapeMismatchError


def softmax(logits: Tensor) -> Tensor:
    """Row-wise softmax with max subtraction."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def softmax_xent(logits: Tensor, labels) -> Tuple[float, Tensor, Tensor]:
    """
    Mean cross-entropy over the batch.
    Returns (loss, probs, grad_logits) with grad = (probs - onehot) / N.
    """
    expect_rank(logits, 2, "logits")
    labels = np.asarray(labels, dtype=np.int64)
    n, k = logits.shape
    if labels.shape != (n,):
        raise ShapeMismatchError(f"Expected {n} labels, got shape {tuple(labels.shape)}")
    if n and (labels.min() < 0 or labels.max() >= k):
        raise InvalidParameterError(
            f"Labels must lie in [0, {k}), found range [{labels.min()}, {labels.max()}]"
        )

    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_norm
    probs = np.exp(log_probs)

    rows = np.arange(n)
    loss = float(-log_probs[rows, labels].mean())

    grad = probs.copy()
    grad[rows, labels] -= 1.0
    grad /= n
    return loss, probs, grad
