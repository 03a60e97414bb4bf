"""
Window datasets: crop, label, resize and persist.

On disk a dataset is a directory holding
    data.bin    float32 little-endian [N, C, H, W] window pixels
    index.csv   sample_id, image_id, x, y, w, h, label, label_name, flipped
    meta.json   DatasetMeta plus the blob shape
"""
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel

from config.config import (
    CLASS_NAMES,
    DATA_FILE,
    DEFAULT_CHANNELS,
    DEFAULT_INPUT_SIZE,
    INDEX_FILE,
    LIMB_REACH_WIDTHS,
    META_FILE,
    NUM_CLASSES,
    PEAK_BAND_FRACTION,
    STRIDE_FRACTION,
)
from gprsynth.io import load_scan_image, read_manifest
from tensor_core.resize import resize_bilinear
from utils.errors import ClassStarvationError, DatasetError, InvalidParameterError, MissingImageError
from utils.helpers import derive_seed
from utils.logger import log_info
from windowing.augment import flip_augment
from windowing.labeling import LabelThresholds, apexes_from_manifest, geometry_from_manifest, label_rects
from windowing.labels import WindowLabel
from windowing.preprocessing import normalize_window, preprocess_scan
from windowing.split import Rect, split_image

BLOB_DTYPE = "<f4"


# --- Schemas ---
class DatasetMeta(BaseModel):
    window: Tuple[int, int]
    stride: Tuple[int, int]
    input_size: Tuple[int, int]
    channels: int = DEFAULT_CHANNELS
    augment: bool = False
    normalize: str = "scale"
    denoise: bool = False
    peak_band: float = PEAK_BAND_FRACTION
    reach_widths: float = LIMB_REACH_WIDTHS
    corpus: str = "mixed"
    other_ratio: Optional[float] = None
    balance_seed: int = 0
    sources: List[str] = []


@dataclass
class Dataset:
    images: np.ndarray      # [N, C, H, W] float32 in [0, 1]
    labels: np.ndarray      # [N] int64 WindowLabel codes
    image_ids: np.ndarray   # [N] source image id
    rects: np.ndarray       # [N, 4] x, y, w, h in source pixels
    flipped: np.ndarray     # [N] bool
    meta: DatasetMeta

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def sample_shape(self) -> Tuple[int, int, int]:
        return tuple(self.images.shape[1:])

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(
            images=self.images[indices],
            labels=self.labels[indices],
            image_ids=self.image_ids[indices],
            rects=self.rects[indices],
            flipped=self.flipped[indices],
            meta=self.meta,
        )

    def concat(self, other: "Dataset", **meta_updates) -> "Dataset":
        return Dataset(
            images=np.concatenate([self.images, other.images]),
            labels=np.concatenate([self.labels, other.labels]),
            image_ids=np.concatenate([self.image_ids, other.image_ids]),
            rects=np.concatenate([self.rects, other.rects]),
            flipped=np.concatenate([self.flipped, other.flipped]),
            meta=self.meta.model_copy(update=meta_updates),
        )

    def class_counts(self, num_classes: int = NUM_CLASSES) -> np.ndarray:
        return np.bincount(self.labels, minlength=num_classes)

    def histogram(self) -> dict:
        counts = self.class_counts()
        return {name: int(count) for name, count in zip(CLASS_NAMES, counts)}


def default_stride(window: Tuple[int, int], fraction: float = STRIDE_FRACTION) -> Tuple[int, int]:
    return max(1, int(window[0] * fraction)), max(1, int(window[1] * fraction))


def crop_windows(
    image: np.ndarray,
    rects: Sequence[Rect],
    input_size: Tuple[int, int],
    channels: int = DEFAULT_CHANNELS,
    normalize: str = "scale",
) -> np.ndarray:
    """Crops of an 8-bit scan, normalized to [0, 1], resized to input_size (w, h), [N, C, H, W]."""
    if channels not in (1, 3):
        raise InvalidParameterError(f"channels must be 1 or 3, got {channels}")
    if not rects:
        return np.zeros((0, channels, input_size[1], input_size[0]), dtype=np.float32)
    crops = np.stack([
        normalize_window(image[r.y:r.y + r.h, r.x:r.x + r.w], normalize) for r in rects
    ])
    # every crop shares one size, so the whole stack resizes as one multi-channel image
    resized = resize_bilinear(crops, (input_size[1], input_size[0]))
    resized = np.clip(resized, 0.0, 1.0).astype(np.float32)[:, None]
    if channels == 3:
        resized = np.repeat(resized, 3, axis=1)
    return resized


def _windows_for_scan(manifest_path: str, window, stride, input_size, channels, normalize,
                      denoise, thresholds):
    manifest = read_manifest(manifest_path)
    image = preprocess_scan(load_scan_image(manifest_path, manifest), denoise)
    rects = split_image(image.shape, window, stride)
    labels = label_rects(rects, apexes_from_manifest(manifest), geometry_from_manifest(manifest), thresholds)
    pixels = crop_windows(image, rects, input_size, channels, normalize)
    return manifest, rects, labels, pixels


def balance_other(dataset: Dataset, ratio: float, seed: int = 0) -> Dataset:
    """
    Keep at most round(ratio * largest non-Other class count) Other windows,
    drawn without replacement from a seed-keyed stream; sample order is kept.
    """
    if ratio <= 0:
        raise InvalidParameterError(f"other_ratio must be > 0, got {ratio}")
    is_other = dataset.labels == int(WindowLabel.OTHER)
    others = np.flatnonzero(is_other)
    largest = int(np.bincount(dataset.labels[~is_other], minlength=NUM_CLASSES).max(initial=0))
    keep = min(others.size, int(round(ratio * largest))) if largest else others.size
    rng = np.random.default_rng(derive_seed(seed, "balance"))
    kept_others = rng.choice(others, size=keep, replace=False)
    indices = np.sort(np.concatenate([np.flatnonzero(~is_other), kept_others]))
    balanced = dataset.subset(indices)
    balanced.meta = dataset.meta.model_copy(update={"other_ratio": ratio, "balance_seed": seed})
    return balanced


def check_class_coverage(dataset: Dataset, num_classes: int = NUM_CLASSES):
    counts = dataset.class_counts(num_classes)
    missing = [CLASS_NAMES[c] for c in range(num_classes) if counts[c] == 0]
    if missing:
        raise ClassStarvationError(
            f"No {', '.join(missing)} windows with window {dataset.meta.window[0]}x"
            f"{dataset.meta.window[1]} on corpus {dataset.meta.corpus!r} "
            f"(histogram {dataset.histogram()})"
        )


def build_dataset(
    manifests: Sequence[str],
    window: Tuple[int, int],
    stride: Optional[Tuple[int, int]] = None,
    input_size: Tuple[int, int] = DEFAULT_INPUT_SIZE,
    augment: bool = False,
    channels: int = DEFAULT_CHANNELS,
    normalize: str = "scale",
    denoise: bool = False,
    thresholds: LabelThresholds = LabelThresholds(),
    workers: int = 1,
    require_all_classes: bool = True,
    other_ratio: Optional[float] = None,
    balance_seed: int = 0,
) -> Dataset:
    """
    Split, label and resize every scan. Samples are ordered by (manifest order,
    rect row-major) whatever the worker count. With other_ratio the Other class
    is subsampled (balance_other) before augmentation.
    """
    if not manifests:
        raise DatasetError("No scan manifests given")
    stride = tuple(stride or default_stride(window))
    job = dict(window=tuple(window), stride=stride, input_size=tuple(input_size), channels=channels,
               normalize=normalize, denoise=denoise, thresholds=thresholds)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(lambda path: _windows_for_scan(path, **job), manifests))

    kinds = sorted({manifest.element_kind for manifest, *_ in results})
    meta = DatasetMeta(
        window=tuple(window), stride=stride, input_size=tuple(input_size), channels=channels,
        augment=False, normalize=normalize, denoise=denoise,
        peak_band=thresholds.peak_band, reach_widths=thresholds.reach_widths,
        corpus=kinds[0] if len(kinds) == 1 else "mixed",
        sources=[os.path.basename(path) for path in manifests],
    )
    dataset = Dataset(
        images=np.concatenate([pixels for *_, pixels in results]),
        labels=np.asarray([int(label) for _, _, labels, _ in results for label in labels], dtype=np.int64),
        image_ids=np.asarray([m.image_id for m, rects, _, _ in results for _ in rects], dtype=object),
        rects=np.asarray([r.as_tuple() for _, rects, _, _ in results for r in rects],
                         dtype=np.int64).reshape(-1, 4),
        flipped=np.zeros(sum(len(rects) for _, rects, _, _ in results), dtype=bool),
        meta=meta,
    )
    if other_ratio is not None:
        dataset = balance_other(dataset, other_ratio, balance_seed)
    if augment:
        dataset = flip_augment(dataset)
    if require_all_classes:
        check_class_coverage(dataset)

    log_info(f"Dataset built: {len(dataset)} windows from {len(manifests)} scans, "
             f"window {window[0]}x{window[1]}, histogram {dataset.histogram()}")
    return dataset


# ================= PERSISTENCE =================
def save_dataset(dataset: Dataset, directory: str) -> str:
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, DATA_FILE), "wb") as f:
        f.write(np.ascontiguousarray(dataset.images, dtype=BLOB_DTYPE).tobytes())

    rects = dataset.rects
    index = pd.DataFrame({
        "sample_id": np.arange(len(dataset)),
        "image_id": dataset.image_ids,
        "x": rects[:, 0], "y": rects[:, 1], "w": rects[:, 2], "h": rects[:, 3],
        "label": dataset.labels,
        "label_name": [CLASS_NAMES[label] for label in dataset.labels],
        "flipped": dataset.flipped.astype(int),
    })
    index.to_csv(os.path.join(directory, INDEX_FILE), index=False, lineterminator="\n")

    meta = dataset.meta.model_dump(mode="json")
    meta.update({"shape": list(dataset.images.shape), "dtype": "float32", "class_counts": dataset.histogram()})
    with open(os.path.join(directory, META_FILE), "w", encoding="utf-8", newline="\n") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
        f.write("\n")
    log_info(f"Dataset saved: {directory} ({len(dataset)} windows)")
    return directory


def load_dataset(directory: str) -> Dataset:
    paths = {name: os.path.join(directory, name) for name in (DATA_FILE, INDEX_FILE, META_FILE)}
    for name, path in paths.items():
        if not os.path.isfile(path):
            raise MissingImageError(f"Dataset directory {directory} lacks {name}")

    with open(paths[META_FILE], "r", encoding="utf-8") as f:
        raw_meta = json.load(f)
    shape = tuple(raw_meta.pop("shape"))
    raw_meta.pop("dtype", None)
    raw_meta.pop("class_counts", None)
    meta = DatasetMeta.model_validate(raw_meta)

    blob = np.fromfile(paths[DATA_FILE], dtype=BLOB_DTYPE)
    if blob.size != int(np.prod(shape)):
        raise DatasetError(f"{paths[DATA_FILE]} holds {blob.size} values, meta.json expects shape {shape}")
    index = pd.read_csv(paths[INDEX_FILE], dtype={"image_id": str})
    if len(index) != shape[0]:
        raise DatasetError(f"{paths[INDEX_FILE]} has {len(index)} rows, meta.json expects {shape[0]}")

    return Dataset(
        images=blob.reshape(shape).astype(np.float32),
        labels=index["label"].to_numpy(dtype=np.int64),
        image_ids=index["image_id"].to_numpy(dtype=object),
        rects=index[["x", "y", "w", "h"]].to_numpy(dtype=np.int64),
        flipped=index["flipped"].to_numpy().astype(bool),
        meta=meta,
    )
