from typing import Dict, List, Optional, Tuple

import numpy as np

from netdef.network import Network, ParamGrads
from utils.errors import ShapeMismatchError

Velocity = List[Dict[str, np.ndarray]]


def init_velocity(network: Network) -> Velocity:
    return [{key: np.zeros_like(value) for key, value in layer.items()} for layer in network.params]


def sgd_step(
    network: Network,
    grads: ParamGrads,
    velocity: Velocity,
    config,
    learning_rate: Optional[float] = None,
) -> Tuple[Network, Velocity]:
    """
    Momentum SGD with L2 decay, in place:
        v <- momentum * v - lr * (g + weight_decay * w)
        w <- w + v
    """
    lr = config.learning_rate if learning_rate is None else learning_rate
    if len(grads) != len(network.params) or len(velocity) != len(network.params):
        raise ShapeMismatchError(
            f"Expected gradients for {len(network.params)} layers, got {len(grads)} "
            f"(velocity {len(velocity)})"
        )

    for index, (params, layer_grads, layer_velocity) in enumerate(zip(network.params, grads, velocity)):
        for key, weight in params.items():
            grad = layer_grads[key]
            if grad.shape != weight.shape:
                raise ShapeMismatchError(
                    f"layer {index} {key}: gradient shape {grad.shape} != parameter shape {weight.shape}"
                )
            v = layer_velocity[key]
            v *= config.momentum
            v -= lr * (grad + config.weight_decay * weight)
            weight += v
    return network, velocity
