"""
Mini-batch SGD training with best-epoch snapshot selection.
"""
from dataclasses import dataclass
from typing import List

import numpy as np

from netdef.network import Network, backward, forward, init_params
from netdef.spec import NetworkSpec
from tensor_core.loss import softmax_xent
from tensor_core.regularization import TRAIN
from tensor_core.state import deterministic_mode
from tensor_core.tensor import expect_shape
from trainer.metrics import Metrics, evaluate
from trainer.optim import init_velocity, sgd_step
from trainer.schemas import TrainConfig
from trainer.split import split_dataset
from utils.errors import InvalidParameterError, TrainingDivergedError
from utils.helpers import derive_seed
from utils.logger import log_debug, log_info
from utils.validators import validate_labels


@dataclass
class TrainResult:
    network: Network
    metrics: Metrics           # best snapshot on the test set, with histories attached
    best_epoch: int
    epochs_run: int

    @property
    def loss_history(self) -> List[float]:
        return self.metrics.loss_history


def train_epoch(network: Network, velocity, images, labels, config: TrainConfig, epoch: int, rng) -> float:
    """One shuffled pass; returns the sample-weighted mean loss."""
    order = rng.permutation(labels.shape[0])
    learning_rate = config.learning_rate_at(epoch)
    total = 0.0
    for step, start in enumerate(range(0, order.size, config.batch_size)):
        idx = order[start:start + config.batch_size]
        step_seed = derive_seed(config.seed, "dropout", epoch, step)
        logits, cache = forward(network, images[idx], TRAIN, seed=step_seed)
        loss, _, grad = softmax_xent(logits.astype(np.float64), labels[idx])
        if not np.isfinite(loss):
            raise TrainingDivergedError(epoch, loss)
        grads = backward(network, cache, grad.astype(network.dtype))
        sgd_step(network, grads, velocity, config, learning_rate)
        total += loss * idx.size
        log_debug(f"epoch {epoch} step {step}: loss={loss:.5f}")
    return total / order.size


def train(spec: NetworkSpec, dataset, config: TrainConfig, test_set=None) -> TrainResult:
    """
    Train from scratch. Without test_set the dataset is split stratified by
    config.train_fraction. Returns the snapshot with the best test accuracy
    (earliest epoch on ties).
    """
    if len(dataset) == 0:
        raise InvalidParameterError("Cannot train on an empty dataset")
    validate_labels(dataset.labels, spec.num_classes)
    expect_shape(dataset.images, (None,) + tuple(spec.input_shape), "dataset images")

    with deterministic_mode(config.deterministic):
        if test_set is None:
            train_set, test_set = split_dataset(dataset, config.train_fraction, config.seed)
        else:
            train_set = dataset

        network = init_params(spec, derive_seed(config.seed, "init"), np.dtype(config.dtype))
        velocity = init_velocity(network)
        images = np.asarray(train_set.images, dtype=network.dtype)
        labels = np.asarray(train_set.labels, dtype=np.int64)
        rng = np.random.default_rng(derive_seed(config.seed, "shuffle"))

        loss_history, accuracy_history = [], []
        best, best_accuracy, best_epoch = None, -1.0, 0
        for epoch in range(1, config.max_epochs + 1):
            epoch_loss = train_epoch(network, velocity, images, labels, config, epoch, rng)
            if not np.isfinite(epoch_loss):
                raise TrainingDivergedError(epoch, epoch_loss)
            test_accuracy = evaluate(network, test_set, config.batch_size).accuracy
            loss_history.append(float(epoch_loss))
            accuracy_history.append(test_accuracy)
            log_info(f"{spec.name} epoch {epoch}/{config.max_epochs}: "
                     f"loss={epoch_loss:.5f} test_acc={test_accuracy:.4f}")
            if test_accuracy > best_accuracy:
                best, best_accuracy, best_epoch = network.copy(), test_accuracy, epoch

        metrics = evaluate(best, test_set, config.batch_size)
        metrics.loss_history = loss_history
        metrics.accuracy_history = accuracy_history

    log_info(f"{spec.name}: best test accuracy {metrics.accuracy:.4f} at epoch {best_epoch}")
    return TrainResult(best, metrics, best_epoch, config.max_epochs)
