from enum import IntEnum


class WindowLabel(IntEnum):
    LEFT = 0
    PEAK = 1
    RIGHT = 2
    OTHER = 3

    @property
    def display(self) -> str:
        return self.name.capitalize()

    def mirrored(self) -> "WindowLabel":
        """Label of the horizontally flipped window."""
        if self == WindowLabel.LEFT:
            return WindowLabel.RIGHT
        if self == WindowLabel.RIGHT:
            return WindowLabel.LEFT
        return self


# label code -> label code after a horizontal flip
MIRROR_CODES = [int(WindowLabel(code).mirrored()) for code in range(len(WindowLabel))]
