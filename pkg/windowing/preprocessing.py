import cv2
import numpy as np

from utils.errors import InvalidParameterError

NORMALIZE_MODES = ("scale", "minmax")


def preprocess_scan(image: np.ndarray, denoise: bool = False) -> np.ndarray:
    """
    Light optional cleanup of a whole 8-bit scan before splitting.
    No thresholding: limb pixels are faint.
    """
    img = np.ascontiguousarray(image, dtype=np.uint8)
    if not denoise:
        return img
    return cv2.GaussianBlur(img, (3, 3), 0)


def normalize_window(crop: np.ndarray, mode: str = "scale") -> np.ndarray:
    """
    Map an 8-bit crop to float64 in [0, 1].
    'scale' divides by 255; 'minmax' stretches the crop's own contrast
    (a flat crop becomes all zeros).
    """
    if mode not in NORMALIZE_MODES:
        raise InvalidParameterError(f"normalize must be one of {NORMALIZE_MODES}, got {mode!r}")
    img = np.asarray(crop, dtype=np.float64)
    if mode == "scale":
        return img / 255.0
    return cv2.normalize(img, None, 0.0, 1.0, cv2.NORM_MINMAX)
