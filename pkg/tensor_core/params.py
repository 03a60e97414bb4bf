from dataclasses import dataclass

from utils.errors import InvalidParameterError


@dataclass(frozen=True)
class ConvParams:
    """
    Convolution geometry. Padding is symmetric zero padding.
    """
    out_channels: int
    kernel_h: int
    kernel_w: int
    stride: int = 1
    padding: int = 0

    def __post_init__(self):
        if self.out_channels < 1:
            raise InvalidParameterError(f"out_channels must be >= 1, got {self.out_channels}")
        if self.kernel_h < 1 or self.kernel_w < 1:
            raise InvalidParameterError(
                f"Kernel extents must be >= 1, got {self.kernel_h}x{self.kernel_w}"
            )
        if self.stride < 1:
            raise InvalidParameterError(f"stride must be >= 1, got {self.stride}")
        if self.padding < 0:
            raise InvalidParameterError(f"padding must be >= 0, got {self.padding}")

    def output_hw(self, height: int, width: int):
        padded_h = height + 2 * self.padding
        padded_w = width + 2 * self.padding
        if padded_h < self.kernel_h:
            raise InvalidParameterError(
                f"Kernel height {self.kernel_h} exceeds padded input height {padded_h}"
            )
        if padded_w < self.kernel_w:
            raise InvalidParameterError(
                f"Kernel width {self.kernel_w} exceeds padded input width {padded_w}"
            )
        out_h = (padded_h - self.kernel_h) // self.stride + 1
        out_w = (padded_w - self.kernel_w) // self.stride + 1
        return out_h, out_w


@dataclass(frozen=True)
class LrnParams:
    """
    Cross-channel local response normalization constants.
    """
    depth_radius: int = 5
    k: float = 2.0
    alpha: float = 1e-4
    beta: float = 0.75

    def __post_init__(self):
        if self.depth_radius < 1:
            raise InvalidParameterError(f"LRN depth n must be >= 1, got {self.depth_radius}")
        if self.k <= 0:
            raise InvalidParameterError(f"LRN k must be > 0, got {self.k}")
        if self.alpha < 0:
            raise InvalidParameterError(f"LRN alpha must be >= 0, got {self.alpha}")
        if self.beta <= 0:
            raise InvalidParameterError(f"LRN beta must be > 0, got {self.beta}")

    @property
    def half_width(self) -> int:
        return self.depth_radius // 2
