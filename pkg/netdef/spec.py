"""
Declarative network descriptions and shape inference.
"""
from enum import Enum
from math import prod
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, model_validator

from tensor_core.params import ConvParams, LrnParams
from tensor_core.pooling import pool_output_hw
from utils.errors import InvalidParameterError, ShapeMismatchError

Shape = Tuple[int, ...]


class LayerKind(str, Enum):
    CONV = "Conv"
    MAXPOOL = "MaxPool"
    AVGPOOL = "AvgPool"
    RELU = "ReLU"
    SIGMOID = "Sigmoid"
    LRN = "LRN"
    BATCHNORM = "BatchNorm"
    DROPOUT = "Dropout"
    FLATTEN = "Flatten"
    DENSE = "Dense"
    SOFTMAX_OUTPUT = "SoftmaxOutput"


# kind -> field that must be set; every other kind-specific field must stay empty
_REQUIRED_FIELD = {
    LayerKind.CONV: "conv",
    LayerKind.MAXPOOL: "window",
    LayerKind.AVGPOOL: "window",
    LayerKind.LRN: "lrn",
    LayerKind.BATCHNORM: "eps",
    LayerKind.DROPOUT: "rate",
    LayerKind.DENSE: "units",
}
_OPTIONAL_FIELD = {
    LayerKind.MAXPOOL: {"stride"},
    LayerKind.AVGPOOL: {"stride"},
    LayerKind.BATCHNORM: {"momentum"},
}
_KIND_FIELDS = ("conv", "window", "stride", "lrn", "eps", "momentum", "rate", "units")


class LayerSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: LayerKind
    conv: Optional[ConvParams] = None
    window: Optional[Tuple[int, int]] = None
    stride: Optional[int] = None
    lrn: Optional[LrnParams] = None
    eps: Optional[float] = None
    momentum: Optional[float] = None
    rate: Optional[float] = None
    units: Optional[int] = None

    @model_validator(mode="after")
    def _check_fields(self):
        allowed = set(_OPTIONAL_FIELD.get(self.kind, set()))
        required = _REQUIRED_FIELD.get(self.kind)
        if required is not None:
            allowed.add(required)
            if getattr(self, required) is None:
                raise ValueError(f"{self.kind.value} layer needs '{required}'")
        stray = [name for name in _KIND_FIELDS if name not in allowed and getattr(self, name) is not None]
        if stray:
            raise ValueError(f"{self.kind.value} layer does not take {', '.join(stray)}")
        if self.units is not None and self.units < 1:
            raise ValueError(f"Dense width must be >= 1, got {self.units}")
        if self.rate is not None and not 0.0 <= self.rate < 1.0:
            raise ValueError(f"Dropout rate must lie in [0, 1), got {self.rate}")
        return self

    @property
    def has_params(self) -> bool:
        return self.kind in (LayerKind.CONV, LayerKind.DENSE, LayerKind.BATCHNORM)


# ================= LAYER CONSTRUCTORS =================
def conv_layer(out_channels: int, kernel: int, stride: int = 1, padding: int = 0) -> LayerSpec:
    return LayerSpec(kind=LayerKind.CONV, conv=ConvParams(out_channels, kernel, kernel, stride, padding))


def pool_layer(window: int, stride: int, average: bool = False) -> LayerSpec:
    kind = LayerKind.AVGPOOL if average else LayerKind.MAXPOOL
    return LayerSpec(kind=kind, window=(window, window), stride=stride)


def relu_layer() -> LayerSpec:
    return LayerSpec(kind=LayerKind.RELU)


def sigmoid_layer() -> LayerSpec:
    return LayerSpec(kind=LayerKind.SIGMOID)


def lrn_layer(params: Optional[LrnParams] = None) -> LayerSpec:
    return LayerSpec(kind=LayerKind.LRN, lrn=params or LrnParams())


def batchnorm_layer(eps: float = 1e-5, momentum: float = 0.9) -> LayerSpec:
    return LayerSpec(kind=LayerKind.BATCHNORM, eps=eps, momentum=momentum)


def dropout_layer(rate: float = 0.5) -> LayerSpec:
    return LayerSpec(kind=LayerKind.DROPOUT, rate=rate)


def flatten_layer() -> LayerSpec:
    return LayerSpec(kind=LayerKind.FLATTEN)


def dense_layer(units: int) -> LayerSpec:
    return LayerSpec(kind=LayerKind.DENSE, units=units)


def softmax_output() -> LayerSpec:
    return LayerSpec(kind=LayerKind.SOFTMAX_OUTPUT)


# ================= NETWORK SPEC =================
class NetworkSpec(BaseModel):
    """
    Ordered layer list for one classifier. Shapes are per sample: (C, H, W)
    before Flatten and (D,) after it.
    """
    model_config = ConfigDict(frozen=True)

    name: str
    input_shape: Tuple[int, int, int]
    layers: List[LayerSpec]
    num_classes: int

    @model_validator(mode="after")
    def _check_head(self):
        if self.num_classes < 2:
            raise ValueError(f"num_classes must be >= 2, got {self.num_classes}")
        if any(extent < 1 for extent in self.input_shape):
            raise ValueError(f"input_shape extents must be >= 1, got {self.input_shape}")
        if not self.layers or self.layers[-1].kind != LayerKind.SOFTMAX_OUTPUT:
            raise ValueError("The final layer must be SoftmaxOutput")
        return self

    @property
    def kinds(self) -> Tuple[str, ...]:
        return tuple(layer.kind.value for layer in self.layers)

    def count(self, kind: LayerKind) -> int:
        return sum(1 for layer in self.layers if layer.kind == kind)


def _layer_output(index: int, layer: LayerSpec, shape: Shape, num_classes: int) -> Shape:
    where = f"layer {index} ({layer.kind.value})"
    kind = layer.kind

    if kind in (LayerKind.CONV, LayerKind.MAXPOOL, LayerKind.AVGPOOL, LayerKind.LRN):
        if len(shape) != 3:
            raise ShapeMismatchError(f"{where} needs a (C, H, W) input, got {shape}")
    if kind in (LayerKind.DENSE, LayerKind.SOFTMAX_OUTPUT) and len(shape) != 1:
        raise ShapeMismatchError(f"{where} needs a flat input, got {shape}; add a Flatten layer")

    if kind == LayerKind.CONV:
        try:
            out_h, out_w = layer.conv.output_hw(shape[1], shape[2])
        except InvalidParameterError as e:
            raise ShapeMismatchError(f"{where}: {e}") from e
        return layer.conv.out_channels, out_h, out_w
    if kind in (LayerKind.MAXPOOL, LayerKind.AVGPOOL):
        stride = layer.stride or layer.window[0]
        try:
            out_h, out_w = pool_output_hw(shape[1], shape[2], layer.window, stride)
        except (InvalidParameterError, ShapeMismatchError) as e:
            raise ShapeMismatchError(f"{where}: {e}") from e
        return shape[0], out_h, out_w
    if kind == LayerKind.FLATTEN:
        return (prod(shape),)
    if kind == LayerKind.DENSE:
        return (layer.units,)
    if kind == LayerKind.SOFTMAX_OUTPUT and shape[0] != num_classes:
        raise ShapeMismatchError(f"{where}: width {shape[0]} does not match num_classes {num_classes}")
    return shape


def infer_shapes(spec: NetworkSpec) -> List[Shape]:
    """Per-sample output shape of every layer, in order. Raises ShapeMismatchError."""
    shapes = []
    shape: Shape = tuple(spec.input_shape)
    for index, layer in enumerate(spec.layers):
        shape = _layer_output(index, layer, shape, spec.num_classes)
        shapes.append(shape)
    return shapes


def layer_inputs(spec: NetworkSpec) -> List[Shape]:
    return [tuple(spec.input_shape)] + infer_shapes(spec)[:-1]


def param_shapes(spec: NetworkSpec) -> List[Dict[str, Shape]]:
    """Trainable tensor shapes per layer (empty dict for parameter-free layers)."""
    result = []
    for layer, shape in zip(spec.layers, layer_inputs(spec)):
        if layer.kind == LayerKind.CONV:
            p = layer.conv
            result.append({"weight": (p.out_channels, shape[0], p.kernel_h, p.kernel_w),
                           "bias": (p.out_channels,)})
        elif layer.kind == LayerKind.DENSE:
            result.append({"weight": (shape[0], layer.units), "bias": (layer.units,)})
        elif layer.kind == LayerKind.BATCHNORM:
            result.append({"gamma": (shape[0],), "beta": (shape[0],)})
        else:
            result.append({})
    return result


def buffer_shapes(spec: NetworkSpec) -> Dict[int, Shape]:
    """Running-statistic shapes keyed by BatchNorm layer index."""
    return {
        index: (shape[0],)
        for index, (layer, shape) in enumerate(zip(spec.layers, layer_inputs(spec)))
        if layer.kind == LayerKind.BATCHNORM
    }


def param_count(spec: NetworkSpec) -> int:
    return sum(prod(shape) for layer in param_shapes(spec) for shape in layer.values())
