"""
Rebar positions from a label map: horizontal clusters of Peak windows, with a
confidence bonus for Left/Right windows flanking the cluster.
"""
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from config.config import FLANK_BONUS
from detector.classify import LabelMap
from windowing.labels import WindowLabel


@dataclass(frozen=True)
class Detection:
    image_id: str
    x_px: float
    confidence: float
    flanked_left: bool
    flanked_right: bool
    n_windows: int


@dataclass(frozen=True)
class DetectionScore:
    image_id: str
    n_apexes: int
    n_detections: int
    matched: int
    precision: float
    recall: float
    mean_abs_error_px: float


def _clusters(xs: np.ndarray, gap: int) -> List[np.ndarray]:
    """Split sorted positions wherever consecutive x differ by more than gap."""
    order = np.argsort(xs, kind="stable")
    breaks = np.flatnonzero(np.diff(xs[order]) > gap) + 1
    return np.split(order, breaks)


def localize_rebar(label_map: LabelMap, flank_bonus: float = FLANK_BONUS) -> List[Detection]:
    peaks = label_map.indices_of(WindowLabel.PEAK)
    if peaks.size == 0:
        return []

    w = label_map.window[0]
    xs_all = np.asarray([r.x for r in label_map.rects], dtype=np.int64)
    left_xs = xs_all[label_map.indices_of(WindowLabel.LEFT)]
    right_xs = xs_all[label_map.indices_of(WindowLabel.RIGHT)]
    peak_xs = xs_all[peaks]
    peak_probs = label_map.probs[peaks, int(WindowLabel.PEAK)]

    detections = []
    for members in _clusters(peak_xs, label_map.stride[0]):
        xs = peak_xs[members]
        weights = peak_probs[members]
        if weights.sum() > 0:
            centre = float(np.dot(weights, xs) / weights.sum()) + w / 2
        else:
            centre = float(xs.mean()) + w / 2
        lo, hi = int(xs.min()), int(xs.max())
        flanked_left = bool(np.any((left_xs >= lo - w) & (left_xs < lo)))
        flanked_right = bool(np.any((right_xs > hi) & (right_xs <= hi + w)))
        confidence = float(weights.mean()) + flank_bonus * (flanked_left + flanked_right)
        detections.append(Detection(
            image_id=label_map.image_id,
            x_px=centre,
            confidence=min(1.0, confidence),
            flanked_left=flanked_left,
            flanked_right=flanked_right,
            n_windows=int(members.size),
        ))
    return detections


def score_detections(
    detections: Sequence[Detection],
    apex_xs: Sequence[float],
    tolerance: float,
    image_id: str = "",
) -> DetectionScore:
    """
    One-to-one matching of detections to true apex columns, closest pairs
    first, accepting pairs within tolerance pixels.
    """
    xs = [d.x_px for d in detections]
    pairs = sorted(
        (abs(x - a), i, j) for i, x in enumerate(xs) for j, a in enumerate(apex_xs) if abs(x - a) <= tolerance
    )
    used_d, used_a, errors = set(), set(), []
    for error, i, j in pairs:
        if i in used_d or j in used_a:
            continue
        used_d.add(i)
        used_a.add(j)
        errors.append(error)

    matched = len(errors)
    return DetectionScore(
        image_id=image_id,
        n_apexes=len(apex_xs),
        n_detections=len(xs),
        matched=matched,
        precision=matched / len(xs) if xs else (1.0 if not apex_xs else 0.0),
        recall=matched / len(apex_xs) if apex_xs else 1.0,
        mean_abs_error_px=float(np.mean(errors)) if errors else float("nan"),
    )
