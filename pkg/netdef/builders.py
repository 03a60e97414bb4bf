"""
Builders for the two classifier families and the CLI network-name grammar.

    tranet        Conv/ReLU/BatchNorm stack with max pooling
    tranet-trad   same stack with sigmoid activations and average pooling
    alexnet       full-width AlexNet
    alexnet-sN    AlexNet with every channel and dense width divided by N
"""
import math
import re
from typing import Optional, Tuple

from config.config import (
    ALEXNET_INPUT,
    BATCHNORM_EPS,
    BATCHNORM_MOMENTUM,
    DEFAULT_INPUT_SIZE,
    DROPOUT_RATE,
    LRN_DEFAULTS,
    NUM_CLASSES,
    SCALED_ALEXNET_INPUT,
    TRANET_MIN_INPUT,
)
from netdef.spec import (
    NetworkSpec,
    batchnorm_layer,
    conv_layer,
    dense_layer,
    dropout_layer,
    flatten_layer,
    infer_shapes,
    lrn_layer,
    pool_layer,
    relu_layer,
    sigmoid_layer,
    softmax_output,
)
from tensor_core.params import LrnParams
from utils.errors import InvalidParameterError, ShapeMismatchError

ACTIVATIONS = ("relu", "sigmoid")
POOLINGS = ("max", "avg")


# ================= TRANET =================
def build_tranet(
    input_shape: Tuple[int, int, int] = (1, 28, 28),
    num_classes: int = NUM_CLASSES,
    activation: str = "relu",
    pooling: str = "max",
    name: str = "tranet",
) -> NetworkSpec:
    channels, height, width = input_shape
    if height < TRANET_MIN_INPUT or width < TRANET_MIN_INPUT:
        raise InvalidParameterError(
            f"TraNet needs an input of at least {TRANET_MIN_INPUT}x{TRANET_MIN_INPUT}, "
            f"got {width}x{height}"
        )
    if activation not in ACTIVATIONS:
        raise InvalidParameterError(f"activation must be one of {ACTIVATIONS}, got {activation!r}")
    if pooling not in POOLINGS:
        raise InvalidParameterError(f"pooling must be one of {POOLINGS}, got {pooling!r}")

    act = relu_layer if activation == "relu" else sigmoid_layer
    average = pooling == "avg"

    def block(out_channels):
        return [conv_layer(out_channels, 3), act(), batchnorm_layer(BATCHNORM_EPS, BATCHNORM_MOMENTUM)]

    layers = (
        block(8)
        + [pool_layer(2, 2, average)]
        + block(16)
        + [pool_layer(2, 2, average)]
        + block(32)
        + [flatten_layer(), dense_layer(num_classes), softmax_output()]
    )
    spec = NetworkSpec(name=name, input_shape=(channels, height, width), layers=layers,
                       num_classes=num_classes)
    infer_shapes(spec)
    return spec


# ================= ALEXNET =================
def scaled_width(count: int, width_scale: float) -> int:
    # tolerance keeps exact fractions like 384 / 3 from rounding up
    return max(1, math.ceil(count * width_scale - 1e-9))


def build_alexnet(
    num_classes: int = NUM_CLASSES,
    input_shape: Tuple[int, int, int] = (1,) + ALEXNET_INPUT,
    width_scale: float = 1.0,
    name: Optional[str] = None,
) -> NetworkSpec:
    if not 0.0 < width_scale <= 1.0:
        raise InvalidParameterError(f"width_scale must lie in (0, 1], got {width_scale}")

    def w(count):
        return scaled_width(count, width_scale)

    lrn = LrnParams(**LRN_DEFAULTS)
    layers = [
        conv_layer(w(96), 11, stride=4), relu_layer(), lrn_layer(lrn), pool_layer(3, 2),
        conv_layer(w(256), 5, padding=2), relu_layer(), lrn_layer(lrn), pool_layer(3, 2),
        conv_layer(w(384), 3, padding=1), relu_layer(),
        conv_layer(w(384), 3, padding=1), relu_layer(),
        conv_layer(w(256), 3, padding=1), relu_layer(), pool_layer(3, 2),
        flatten_layer(),
        dense_layer(w(4096)), relu_layer(), dropout_layer(DROPOUT_RATE),
        dense_layer(w(4096)), relu_layer(), dropout_layer(DROPOUT_RATE),
        dense_layer(num_classes), softmax_output(),
    ]
    if name is None:
        name = "alexnet" if width_scale == 1.0 else f"alexnet-x{width_scale:g}"
    spec = NetworkSpec(name=name, input_shape=tuple(input_shape), layers=layers, num_classes=num_classes)
    try:
        infer_shapes(spec)
    except ShapeMismatchError as e:
        raise InvalidParameterError(
            f"Input {input_shape[2]}x{input_shape[1]} is incompatible with the AlexNet "
            f"11x11 stride-4 stem ({e}); use at least {SCALED_ALEXNET_INPUT[0]}x{SCALED_ALEXNET_INPUT[1]}"
        ) from e
    return spec


# ================= NAME GRAMMAR =================
_ALEXNET_SCALED = re.compile(r"alexnet-s(\d+)")


def default_input_size(net_name: str) -> Tuple[int, int]:
    """Default (width, height) for a network name."""
    name = net_name.lower()
    if name == "alexnet":
        return ALEXNET_INPUT
    if _ALEXNET_SCALED.fullmatch(name):
        return SCALED_ALEXNET_INPUT
    return DEFAULT_INPUT_SIZE


def build_network(
    net_name: str,
    input_size: Optional[Tuple[int, int]] = None,
    channels: int = 1,
    num_classes: int = NUM_CLASSES,
) -> NetworkSpec:
    """
    Resolve a CLI network name. input_size is (width, height); None picks the
    family default.
    """
    name = net_name.strip().lower()
    width, height = input_size or default_input_size(name)
    shape = (channels, height, width)

    if name == "tranet":
        return build_tranet(shape, num_classes, name=name)
    if name == "tranet-trad":
        return build_tranet(shape, num_classes, activation="sigmoid", pooling="avg", name=name)
    if name == "alexnet":
        return build_alexnet(num_classes, shape, 1.0, name=name)
    match = _ALEXNET_SCALED.fullmatch(name)
    if match:
        divisor = int(match.group(1))
        if divisor < 1:
            raise InvalidParameterError(f"AlexNet scale divisor must be >= 1, got {divisor}")
        return build_alexnet(num_classes, shape, 1.0 / divisor, name=name)
    raise InvalidParameterError(
        f"Unknown network {net_name!r}; expected tranet, tranet-trad, alexnet or alexnet-sN"
    )


def family_of(net_name: str) -> str:
    return "alexnet" if net_name.lower().startswith("alexnet") else "tranet"
