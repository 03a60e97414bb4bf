from dataclasses import dataclass
from typing import List, Optional, Tuple

from utils.errors import InvalidParameterError
from utils.helpers import format_size, parse_size


@dataclass(frozen=True)
class WindowSizePreset:
    """
    Splitting rectangle, width x height in pixels (120 wide x 30 tall).
    """
    width: int
    height: int
    custom: bool = False

    @property
    def size(self) -> Tuple[int, int]:
        return self.width, self.height

    @property
    def name(self) -> str:
        return format_size(self.size)

    def default_stride(self, fraction: float) -> Tuple[int, int]:
        return max(1, int(self.width * fraction)), max(1, int(self.height * fraction))


# The four splitting rectangles of the window-size sweep
PRESETS: List[WindowSizePreset] = [
    WindowSizePreset(120, 30),
    WindowSizePreset(150, 50),
    WindowSizePreset(200, 80),
    WindowSizePreset(250, 100),
]


def get_matching_preset(width: int, height: int) -> Optional[WindowSizePreset]:
    """Finds the preset with exactly this size."""
    for preset in PRESETS:
        if preset.size == (width, height):
            return preset
    return None


def get_preset(text: str, allow_custom: bool = False) -> WindowSizePreset:
    """
    Resolve a 'WxH' string. Sizes outside the preset list need allow_custom.
    """
    try:
        width, height = parse_size(text)
    except ValueError as e:
        raise InvalidParameterError(str(e)) from e

    preset = get_matching_preset(width, height)
    if preset is not None:
        return preset
    if not allow_custom:
        names = ", ".join(p.name for p in PRESETS)
        raise InvalidParameterError(
            f"Window {text} is not a preset ({names}); pass --allow-custom-window to use it"
        )
    if width < 1 or height < 1:
        raise InvalidParameterError(f"Window extents must be >= 1, got {width}x{height}")
    return WindowSizePreset(width, height, custom=True)


def parse_window_list(text: str, allow_custom: bool = False) -> List[WindowSizePreset]:
    """'all' or a comma-separated list of WxH sizes."""
    if text.strip().lower() == "all":
        return list(PRESETS)
    return [get_preset(part.strip(), allow_custom) for part in text.split(",") if part.strip()]
