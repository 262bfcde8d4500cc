"""
Parameter layout and Glorot-uniform initialization.

Parameter names, in creation order:

    conv{i}.weight  (K, C_in, C_out)    conv{i}.bias  (C_out,)
    gru{j}.fwd.wx   (I, 3H)             gru{j}.fwd.wh (H, 3H)    gru{j}.fwd.b (3H,)
    gru{j}.bwd.*    same shapes as fwd
    head.weight     (2H_last, D)        head.bias     (D,)

D is C for sigmoid heads and C + 1 for softmax heads.
"""

import logging
import math
from collections import OrderedDict
from typing import Dict, List, Tuple

import numpy as np

from core.models.config import ModelConfig
from core.utils.seeding import derive_rng

logger = logging.getLogger(__name__)

DIRECTIONS = ("fwd", "bwd")


def parameter_shapes(config: ModelConfig) -> List[Tuple[str, Tuple[int, ...], Tuple[int, int]]]:
    """(name, shape, (fan_in, fan_out)) for every parameter; fans are (0, 0) for biases."""
    shapes = []
    channels = config.input_dim
    for i, layer in enumerate(config.conv_layers):
        shapes.append((f"conv{i}.weight", (layer.kernel, channels, layer.channels),
                       (layer.kernel * channels, layer.kernel * layer.channels)))
        shapes.append((f"conv{i}.bias", (layer.channels,), (0, 0)))
        channels = layer.channels

    width = channels
    for j, hidden in enumerate(config.recurrent_sizes):
        for direction in DIRECTIONS:
            prefix = f"gru{j}.{direction}"
            shapes.append((f"{prefix}.wx", (width, 3 * hidden), (width, 3 * hidden)))
            shapes.append((f"{prefix}.wh", (hidden, 3 * hidden), (hidden, 3 * hidden)))
            shapes.append((f"{prefix}.b", (3 * hidden,), (0, 0)))
        width = 2 * hidden

    shapes.append(("head.weight", (width, config.output_dim), (width, config.output_dim)))
    shapes.append(("head.bias", (config.output_dim,), (0, 0)))
    return shapes


def glorot_bound(fan_in: int, fan_out: int) -> float:
    return math.sqrt(6.0 / (fan_in + fan_out))


def init_parameters(config: ModelConfig, seed: int) -> "OrderedDict[str, np.ndarray]":
    """
    Glorot-uniform weights and zero biases, drawn in a fixed order.

    Args:
        config: Network shape
        seed: Top-level seed; the 'init' stream is derived from it

    Returns:
        Ordered name -> array map
    """
    rng = derive_rng(seed, "init")
    parameters: "OrderedDict[str, np.ndarray]" = OrderedDict()
    for name, shape, (fan_in, fan_out) in parameter_shapes(config):
        if fan_in == 0:
            parameters[name] = np.zeros(shape)
        else:
            bound = glorot_bound(fan_in, fan_out)
            parameters[name] = rng.uniform(-bound, bound, size=shape)

    logger.debug("parameters_initialized", extra={
        "seed": seed,
        "tensors": len(parameters),
        "values": int(sum(p.size for p in parameters.values())),
    })
    return parameters


def check_parameters(config: ModelConfig, parameters: Dict[str, np.ndarray]) -> None:
    """Raise ValueError unless ``parameters`` has exactly the layout of ``config``."""
    expected = {name: shape for name, shape, _ in parameter_shapes(config)}
    missing = sorted(set(expected) - set(parameters))
    extra = sorted(set(parameters) - set(expected))
    if missing or extra:
        raise ValueError(f"parameter names do not match config (missing={missing}, unexpected={extra})")
    for name, shape in expected.items():
        actual = tuple(np.shape(parameters[name]))
        if actual != shape:
            raise ValueError(f"parameter {name} has shape {actual}, config expects {shape}")
