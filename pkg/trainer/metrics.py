"""
Classification metrics and their CSV form.
"""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from config.config import CLASS_NAMES
from netdef.network import Network, forward
from tensor_core.loss import softmax
from tensor_core.regularization import INFER
from utils.errors import InvalidParameterError


@dataclass
class Metrics:
    accuracy: float
    confusion: np.ndarray              # rows = true class, cols = predicted class
    precision: np.ndarray
    recall: np.ndarray
    predictions: np.ndarray
    labels: np.ndarray
    loss_history: List[float] = field(default_factory=list)
    accuracy_history: List[float] = field(default_factory=list)

    @property
    def num_classes(self) -> int:
        return self.confusion.shape[0]

    @property
    def balanced_accuracy(self) -> float:
        """Mean recall over the classes present in the labels."""
        support = self.confusion.sum(axis=1) > 0
        return float(self.recall[support].mean())

    def summary(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "balanced_accuracy": self.balanced_accuracy,
            "precision": [float(p) for p in self.precision],
            "recall": [float(r) for r in self.recall],
            "confusion": self.confusion.tolist(),
            "loss_history": list(self.loss_history),
            "accuracy_history": list(self.accuracy_history),
        }


def confusion_matrix(labels: np.ndarray, predictions: np.ndarray, num_classes: int) -> np.ndarray:
    flat = np.asarray(labels, dtype=np.int64) * num_classes + np.asarray(predictions, dtype=np.int64)
    return np.bincount(flat, minlength=num_classes * num_classes).reshape(num_classes, num_classes)


def metrics_from_predictions(labels, predictions, num_classes: int) -> Metrics:
    labels = np.asarray(labels, dtype=np.int64)
    predictions = np.asarray(predictions, dtype=np.int64)
    if labels.size == 0:
        raise InvalidParameterError("Cannot compute metrics on an empty dataset")

    confusion = confusion_matrix(labels, predictions, num_classes)
    hits = np.diag(confusion).astype(np.float64)
    predicted = confusion.sum(axis=0)
    actual = confusion.sum(axis=1)
    # empty denominators report 0
    precision = np.divide(hits, predicted, out=np.zeros(num_classes), where=predicted > 0)
    recall = np.divide(hits, actual, out=np.zeros(num_classes), where=actual > 0)
    return Metrics(
        accuracy=float(hits.sum() / confusion.sum()),
        confusion=confusion,
        precision=precision,
        recall=recall,
        predictions=predictions,
        labels=labels,
    )


def predict(network: Network, images: np.ndarray, batch_size: int = 64):
    """Infer-mode class probabilities and argmax predictions (ties -> lowest index)."""
    images = np.asarray(images, dtype=network.dtype)
    probs = []
    for start in range(0, images.shape[0], batch_size):
        logits, _ = forward(network, images[start:start + batch_size], INFER)
        probs.append(softmax(logits.astype(np.float64)))
    probs = np.concatenate(probs) if probs else np.zeros((0, network.spec.num_classes))
    return probs, probs.argmax(axis=1)


def evaluate(network: Network, dataset, batch_size: int = 64) -> Metrics:
    if len(dataset) == 0:
        raise InvalidParameterError("Cannot evaluate on an empty dataset")
    _, predictions = predict(network, dataset.images, batch_size)
    return metrics_from_predictions(dataset.labels, predictions, network.spec.num_classes)


# ================= CSV =================
def write_metrics_csv(metrics: Metrics, path: str, class_names: Optional[Sequence[str]] = None) -> str:
    """
    Epoch rows (epoch, train_loss, test_acc), then a '# confusion' block with
    one row per true class, then a '# per_class' block with precision/recall,
    then the plain and balanced (mean per-class recall) accuracies.
    """
    names = list(class_names or CLASS_NAMES[:metrics.num_classes])
    epochs = pd.DataFrame({
        "epoch": np.arange(1, len(metrics.loss_history) + 1),
        "train_loss": metrics.loss_history,
        "test_acc": metrics.accuracy_history,
    })
    confusion = pd.DataFrame(metrics.confusion, columns=names)
    confusion.insert(0, "true_class", names)
    per_class = pd.DataFrame({"class": names, "precision": metrics.precision, "recall": metrics.recall})

    with open(path, "w", encoding="utf-8", newline="") as f:
        epochs.to_csv(f, index=False, lineterminator="\n")
        f.write("# confusion\n")
        confusion.to_csv(f, index=False, lineterminator="\n")
        f.write("# per_class\n")
        per_class.to_csv(f, index=False, lineterminator="\n", float_format="%.6f")
        f.write(f"# accuracy,{metrics.accuracy:.6f}\n")
        f.write(f"# balanced_accuracy,{metrics.balanced_accuracy:.6f}\n")
    return path
