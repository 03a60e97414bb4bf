import os

from utils.errors import InvalidParameterError, OutputDirError, ShapeMismatchError


def validate_fraction(value: float, name: str):
    if not 0.0 < value < 1.0:
        raise InvalidParameterError(f"{name} must lie in (0, 1), got {value}")


def validate_window_fits(image_shape, window):
    """image_shape is (rows, cols); window is (width, height)."""
    rows, cols = image_shape[0], image_shape[1]
    w, h = window
    if w < 1 or h < 1:
        raise InvalidParameterError(f"Window extents must be >= 1, got {w}x{h}")
    if w > cols:
        raise ShapeMismatchError(f"Window width {w} exceeds image width {cols}")
    if h > rows:
        raise ShapeMismatchError(f"Window height {h} exceeds image height {rows}")


def validate_labels(labels, num_classes: int):
    if len(labels) == 0:
        return
    low, high = int(min(labels)), int(max(labels))
    if low < 0 or high >= num_classes:
        raise InvalidParameterError(
            f"Labels must lie in [0, {num_classes}), found range [{low}, {high}]"
        )


def validate_output_dir(path: str) -> str:
    """
    Create the directory if needed and make sure it is writable.
    """
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as e:
        raise OutputDirError(f"Cannot create output directory {path}: {e}") from e

    if not os.access(path, os.W_OK):
        raise OutputDirError(f"Output directory is not writable: {path}")
    return path


def validate_inside(path: str, root: str) -> str:
    """Reject output paths that escape the configured output directory."""
    real_root = os.path.realpath(root)
    real_path = os.path.realpath(path)
    if os.path.commonpath([real_root, real_path]) != real_root:
        raise OutputDirError(f"{path} is outside the output directory {root}")
    return path
