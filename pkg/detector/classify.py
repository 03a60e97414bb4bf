from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from config.config import NUM_CLASSES
from netdef.network import Network
from trainer.metrics import predict
from utils.errors import ShapeMismatchError
from windowing.dataset import crop_windows
from windowing.labeling import LabelThresholds, apexes_from_manifest, geometry_from_manifest, label_rects
from windowing.labels import WindowLabel
from windowing.preprocessing import preprocess_scan
from windowing.split import Rect, split_image


@dataclass
class LabelMap:
    image_id: str
    rects: List[Rect]
    labels: np.ndarray          # [M] WindowLabel codes
    probs: np.ndarray           # [M, K], rows sum to 1
    window: Tuple[int, int]
    stride: Tuple[int, int]
    image_shape: Tuple[int, int]

    def __len__(self) -> int:
        return len(self.rects)

    def indices_of(self, label: WindowLabel) -> np.ndarray:
        return np.flatnonzero(self.labels == int(label))


def network_input_size(network: Network) -> Tuple[int, int]:
    _, height, width = network.spec.input_shape
    return width, height


def classify_windows(
    network: Network,
    image: np.ndarray,
    window: Tuple[int, int],
    stride: Tuple[int, int],
    input_size: Optional[Tuple[int, int]] = None,
    image_id: str = "",
    normalize: str = "scale",
    denoise: bool = False,
    batch_size: int = 64,
) -> LabelMap:
    """
    Infer-mode classification of every rect of an 8-bit scan. input_size is
    (w, h) and must match the network input when given.
    """
    expected = network_input_size(network)
    if input_size is not None and tuple(input_size) != expected:
        raise ShapeMismatchError(
            f"Window input size {input_size[0]}x{input_size[1]} does not match the "
            f"network input {expected[0]}x{expected[1]}"
        )
    image = preprocess_scan(image, denoise)
    rects = split_image(image.shape, window, stride)
    pixels = crop_windows(image, rects, expected, network.spec.input_shape[0], normalize)
    probs, predictions = predict(network, pixels, batch_size)
    return LabelMap(image_id, rects, predictions.astype(np.int64), probs,
                    tuple(window), tuple(stride), tuple(image.shape[:2]))


def oracle_label_map(
    manifest,
    window: Tuple[int, int],
    stride: Tuple[int, int],
    thresholds: LabelThresholds = LabelThresholds(),
) -> LabelMap:
    """Label map built from ground-truth labels with one-hot probabilities."""
    image_shape = (manifest.height, manifest.width)
    rects = split_image(image_shape, window, stride)
    labels = np.asarray(
        label_rects(rects, apexes_from_manifest(manifest), geometry_from_manifest(manifest), thresholds),
        dtype=np.int64,
    )
    probs = np.eye(NUM_CLASSES)[labels] if labels.size else np.zeros((0, NUM_CLASSES))
    return LabelMap(manifest.image_id, rects, labels, probs, tuple(window), tuple(stride), image_shape)
