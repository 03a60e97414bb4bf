"""
Geometric window labels from ground-truth apexes.

    Peak   exactly one apex inside the rect lies in the central band of its width
    Left   no apex inside; the nearest apex is right of the rect, within reach,
           and its travel-time curve passes through the rect's rows
    Right  mirror of Left
    Other  everything else
"""
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from config.config import LIMB_REACH_WIDTHS, PEAK_BAND_FRACTION
from gprsynth.physics import travel_time
from windowing.labels import WindowLabel
from windowing.split import Rect


@dataclass(frozen=True)
class Apex:
    x_px: int
    y_px: int
    x0: float       # metres along the scan line
    depth: float    # metres


@dataclass(frozen=True)
class ScanGeometry:
    dx: float
    dt: float
    velocity: float

    def limb_rows(self, apex: Apex, cols: np.ndarray) -> np.ndarray:
        """Fractional image row of the apex's travel-time curve at the given columns."""
        return travel_time(np.asarray(cols) * self.dx, apex.x0, apex.depth, self.velocity) / self.dt


@dataclass(frozen=True)
class LabelThresholds:
    peak_band: float = PEAK_BAND_FRACTION
    reach_widths: float = LIMB_REACH_WIDTHS


def apexes_from_manifest(manifest) -> List[Apex]:
    return [Apex(a.x_px, a.y_px, a.x0_m, a.depth_m) for a in manifest.apexes]


def geometry_from_manifest(manifest) -> ScanGeometry:
    return ScanGeometry(manifest.dx, manifest.dt, manifest.scene.velocity)


def horizontal_gap(rect: Rect, col: int) -> int:
    """Pixels between a column and the rect's column span; 0 inside the span."""
    if col < rect.x:
        return rect.x - col
    if col > rect.x + rect.w - 1:
        return col - (rect.x + rect.w - 1)
    return 0


def limb_crosses(rect: Rect, apex: Apex, geometry: ScanGeometry) -> bool:
    cols = np.arange(rect.x, rect.x + rect.w)
    rows = geometry.limb_rows(apex, cols)
    return bool(rows.min() <= rect.y + rect.h - 1 and rows.max() >= rect.y)


def in_peak_band(rect: Rect, col: int, band: float) -> bool:
    lo = rect.x + rect.w * (1.0 - band) / 2.0
    hi = rect.x + rect.w * (1.0 + band) / 2.0
    return lo <= col <= hi


def auto_label(
    rect: Rect,
    apexes: Sequence[Apex],
    geometry: ScanGeometry,
    thresholds: LabelThresholds = LabelThresholds(),
) -> WindowLabel:
    inside = [a for a in apexes if rect.contains(a.x_px, a.y_px)]
    if inside:
        central = [a for a in inside if in_peak_band(rect, a.x_px, thresholds.peak_band)]
        return WindowLabel.PEAK if len(central) == 1 else WindowLabel.OTHER
    if not apexes:
        return WindowLabel.OTHER

    nearest = min(apexes, key=lambda a: (horizontal_gap(rect, a.x_px), a.x_px))
    gap = horizontal_gap(rect, nearest.x_px)
    if gap == 0 or gap > thresholds.reach_widths * rect.w:
        return WindowLabel.OTHER
    if not limb_crosses(rect, nearest, geometry):
        return WindowLabel.OTHER
    return WindowLabel.LEFT if nearest.x_px > rect.x else WindowLabel.RIGHT


def label_rects(rects, apexes, geometry, thresholds: LabelThresholds = LabelThresholds()) -> List[WindowLabel]:
    return [auto_label(rect, apexes, geometry, thresholds) for rect in rects]
