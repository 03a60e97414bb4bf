import math
from typing import Tuple

import numpy as np

from utils.errors import ClassStarvationError, InvalidParameterError
from utils.helpers import derive_seed
from utils.validators import validate_fraction


def stratified_indices(labels: np.ndarray, train_fraction: float, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per class: shuffle members, keep round(fraction * n_c) for training, clamped
    so both sides get at least one sample.
    """
    validate_fraction(train_fraction, "train_fraction")
    labels = np.asarray(labels)
    if labels.size == 0:
        raise InvalidParameterError("Cannot split an empty dataset")

    rng = np.random.default_rng(derive_seed(seed, "split"))
    train, test = [], []
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        if members.size < 2:
            raise ClassStarvationError(
                f"Class {int(cls)} has {members.size} sample(s); a stratified split needs at least 2"
            )
        members = rng.permutation(members)
        n_train = math.floor(train_fraction * members.size + 0.5)
        n_train = min(max(n_train, 1), members.size - 1)
        train.append(members[:n_train])
        test.append(members[n_train:])

    train_idx = rng.permutation(np.concatenate(train))
    test_idx = np.sort(np.concatenate(test))
    return train_idx, test_idx


def split_dataset(dataset, train_fraction: float = 0.8, seed: int = 0):
    """Disjoint stratified (train, test) partition of a Dataset."""
    train_idx, test_idx = stratified_indices(dataset.labels, train_fraction, seed)
    return dataset.subset(train_idx), dataset.subset(test_idx)
