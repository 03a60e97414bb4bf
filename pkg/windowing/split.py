from dataclasses import dataclass
from typing import List, Tuple

from utils.errors import InvalidParameterError
from utils.validators import validate_window_fits


@dataclass(frozen=True)
class Rect:
    """Pixel rectangle; (x, y) is the top-left corner, x along traces, y along time."""
    x: int
    y: int
    w: int
    h: int

    @property
    def center_x(self) -> float:
        return self.x + self.w / 2

    def as_tuple(self) -> Tuple[int, int, int, int]:
        return self.x, self.y, self.w, self.h

    def contains(self, col: int, row: int) -> bool:
        return self.x <= col < self.x + self.w and self.y <= row < self.y + self.h


def grid_counts(image_shape, window, stride) -> Tuple[int, int]:
    rows, cols = image_shape[0], image_shape[1]
    return (cols - window[0]) // stride[0] + 1, (rows - window[1]) // stride[1] + 1


def split_image(image_shape, window: Tuple[int, int], stride: Tuple[int, int]) -> List[Rect]:
    """
    Regular grid of window rects over an image of shape (rows, cols), row-major
    from the top-left; trailing partial windows are dropped.
    """
    validate_window_fits(image_shape, window)
    sx, sy = stride
    if sx < 1 or sy < 1:
        raise InvalidParameterError(f"Strides must be >= 1, got ({sx}, {sy})")
    w, h = window
    nx, ny = grid_counts(image_shape, window, stride)
    return [Rect(ix * sx, iy * sy, w, h) for iy in range(ny) for ix in range(nx)]
