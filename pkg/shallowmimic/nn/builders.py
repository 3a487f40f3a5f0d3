"""
Architecture builders.

Convenience constructors for the network families the experiments use:
deep ReLU MLP teachers, shallow students with an optional linear
bottleneck, and the single conv+pool student feature extractor.
"""

import logging
from typing import List, Optional, Sequence, Tuple, Union

from shallowmimic.exceptions import SpecError
from shallowmimic.nn.layers import (
    Activation,
    Conv2D,
    Dense,
    Dropout,
    Flatten,
    LayerSpec,
    MaxPool2D,
    Shape,
    is_bottleneck,
)
from shallowmimic.nn.network import NetworkSpec

logger = logging.getLogger(__name__)


def _front_end(input_shape: Shape, conv: Optional[Tuple[int, int, int]]) -> Tuple[List[LayerSpec], int]:
    """Layers that turn the input into flat rows, and the resulting width."""
    layers: List[LayerSpec] = []
    shape: Shape = tuple(input_shape)

    if conv is not None:
        if len(shape) != 3:
            raise SpecError(f"A conv front end needs an image input shape. Got {shape}")
        channels, kernel, pool = conv
        conv_layer = Conv2D(shape[0], channels, kernel, kernel)
        pool_layer = MaxPool2D(pool, pool)
        layers.extend([conv_layer, pool_layer, Flatten()])
        shape = Flatten().output_shape(pool_layer.output_shape(conv_layer.output_shape(shape)))
    elif len(shape) == 3:
        layers.append(Flatten())
        shape = Flatten().output_shape(shape)

    return layers, shape[0]


def mlp_spec(
    input_shape: Union[int, Shape],
    hidden: Sequence[int],
    output_dim: int,
    dropout: float = 0.0,
    conv: Optional[Tuple[int, int, int]] = None,
) -> NetworkSpec:
    """
    Build a ReLU MLP, e.g. the ``2k-2k-2k + dropout`` deep baseline.

    Args:
        input_shape: Input dimension D, or ``(channels, h, w)``.
        hidden: Widths of the ReLU hidden layers.
        output_dim: Number of classes C.
        dropout: Dropout rate after every hidden layer (0 disables).
        conv: Optional ``(out_channels, kernel, pool)`` conv+pool front end.
    """
    shape: Shape = (input_shape,) if isinstance(input_shape, int) else tuple(input_shape)
    layers, width = _front_end(shape, conv)
    for units in hidden:
        layers.append(Dense(width, units, Activation.RELU))
        if dropout > 0.0:
            layers.append(Dropout(dropout))
        width = units
    layers.append(Dense(width, output_dim, Activation.IDENTITY))
    return NetworkSpec(shape, tuple(layers), output_dim)


def shallow_spec(
    input_shape: Shape,
    hidden: int,
    output_dim: int,
    bottleneck: Optional[int] = None,
    dropout: float = 0.0,
    conv: Optional[Tuple[int, int, int]] = None,
    bottleneck_bias: bool = False,
) -> NetworkSpec:
    """
    Build a single-hidden-layer student.

    Args:
        input_shape: ``(D,)`` or ``(channels, h, w)``.
        hidden: Number of non-linear hidden units H.
        output_dim: Number of classes C.
        bottleneck: Width k of a linear bottleneck before the hidden layer
            (``250L-400k`` style); None or 0 disables it.
        dropout: Dropout rate after the hidden layer.
        conv: ``(out_channels, kernel, pool)`` for a single conv+pool
            feature extractor in front of the hidden layer; requires an
            image input shape.
        bottleneck_bias: Whether the linear bottleneck carries a bias.
    """
    layers, width = _front_end(tuple(input_shape), conv)
    if bottleneck:
        layers.append(Dense(width, bottleneck, Activation.IDENTITY, bias=bottleneck_bias))
        width = bottleneck

    layers.append(Dense(width, hidden, Activation.RELU))
    if dropout > 0.0:
        layers.append(Dropout(dropout))
    layers.append(Dense(hidden, output_dim, Activation.IDENTITY))
    return NetworkSpec(tuple(input_shape), tuple(layers), output_dim)


def hidden_unit_counts(spec: NetworkSpec) -> Tuple[int, int]:
    """
    Count hidden units.

    Returns:
        Tuple of (non-linear hidden units, linear bottleneck units). The
        output layer is not a hidden layer and is never counted.
    """
    nonlinear = 0
    linear = 0
    for layer in spec.layers[:-1]:
        if isinstance(layer, Dense):
            if is_bottleneck(layer):
                linear += layer.out_features
            else:
                nonlinear += layer.out_features
    return nonlinear, linear


def format_hidden_units(spec: NetworkSpec) -> str:
    """Render hidden units as ``H`` or ``H+kL``."""
    nonlinear, linear = hidden_unit_counts(spec)
    return f"{nonlinear}+{linear}L" if linear else str(nonlinear)
