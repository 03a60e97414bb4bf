import numpy as np

from windowing.labels import MIRROR_CODES


def flip_windows(images: np.ndarray) -> np.ndarray:
    """Horizontal mirror of [N, C, H, W] windows."""
    return np.ascontiguousarray(np.flip(images, axis=3))


def mirror_labels(labels: np.ndarray) -> np.ndarray:
    return np.asarray(MIRROR_CODES, dtype=np.int64)[np.asarray(labels, dtype=np.int64)]


def flip_augment(dataset):
    """
    Append the horizontal mirror of every window (Left <-> Right, Peak and
    Other unchanged). Originals keep their positions; mirrors follow in the
    same order.
    """
    flipped = dataset.__class__(
        images=flip_windows(dataset.images),
        labels=mirror_labels(dataset.labels),
        image_ids=dataset.image_ids.copy(),
        rects=dataset.rects.copy(),
        flipped=~dataset.flipped,
        meta=dataset.meta,
    )
    return dataset.concat(flipped, augment=True)
