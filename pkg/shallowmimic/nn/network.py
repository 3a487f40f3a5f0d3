"""
Network specifications and bound models.

A NetworkSpec is a declarative layer stack over a declared input shape.
A Model binds a spec to concrete parameter tensors. Both are treated as
immutable: training produces new Model instances.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt

from shallowmimic.exceptions import ShapeError, SpecError
from shallowmimic.nn.layers import (
    PARAMETERIZED,
    Conv2D,
    Dense,
    Dropout,
    Flatten,
    LayerSpec,
    MaxPool2D,
    Shape,
)
from shallowmimic.numerics.rng import RngStream

logger = logging.getLogger(__name__)

Array = npt.NDArray[np.float64]


@dataclass(frozen=True)
class NetworkSpec:
    """Declarative description of a feed-forward network.

    Attributes:
        input_shape: ``(D,)`` for flat input or ``(channels, h, w)`` for
            images; batches are always passed as flat rows of width
            ``input_dim``.
        layers: Ordered layer stack.
        output_dim: Number of classes C.
    """

    input_shape: Shape
    layers: Tuple[LayerSpec, ...]
    output_dim: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "input_shape", tuple(int(d) for d in self.input_shape))
        object.__setattr__(self, "layers", tuple(self.layers))
        self.layer_shapes()

    @property
    def input_dim(self) -> int:
        return int(math.prod(self.input_shape))

    def layer_shapes(self) -> List[Shape]:
        """
        Compute the output shape of every layer.

        Raises:
            SpecError: Naming the offending layer index when the stack does
                not chain, a hyperparameter is out of range, or the final
                output width differs from ``output_dim``.
        """
        if len(self.input_shape) not in (1, 3) or any(d < 1 for d in self.input_shape):
            raise SpecError(f"Invalid input shape {self.input_shape}")

        if not self.layers:
            raise SpecError("Network must contain at least one layer")

        shapes: List[Shape] = []
        shape = self.input_shape
        for index, layer in enumerate(self.layers):
            _check_hyperparameters(index, layer)
            try:
                shape = layer.output_shape(shape)
            except SpecError as e:
                raise SpecError(f"Layer {index}: {e}") from e
            shapes.append(shape)

        last_param = max(
            (i for i, layer in enumerate(self.layers) if isinstance(layer, PARAMETERIZED)),
            default=None,
        )
        if last_param is None or not isinstance(self.layers[last_param], Dense):
            raise SpecError(f"Layer {len(self.layers) - 1}: network must end in a Dense layer")

        if shape != (self.output_dim,):
            raise SpecError(
                f"Layer {len(self.layers) - 1}: output shape {shape} "
                f"does not match output_dim {self.output_dim}"
            )
        return shapes

    def __str__(self) -> str:
        body = " -> ".join(str(layer) for layer in self.layers)
        return f"NetworkSpec({self.input_shape} -> {body})"


def _check_hyperparameters(index: int, layer: LayerSpec) -> None:
    if isinstance(layer, Dense):
        if layer.in_features < 1 or layer.out_features < 1:
            raise SpecError(f"Layer {index}: Dense widths must be positive")
    elif isinstance(layer, Dropout):
        if not 0.0 <= layer.rate < 1.0:
            raise SpecError(f"Layer {index}: dropout rate must be in [0, 1). Got {layer.rate}")
    elif isinstance(layer, Conv2D):
        if min(layer.in_channels, layer.out_channels, layer.kernel_h, layer.kernel_w) < 1:
            raise SpecError(f"Layer {index}: Conv2D sizes must be positive")
    elif isinstance(layer, MaxPool2D):
        if layer.pool_h < 1 or layer.pool_w < 1:
            raise SpecError(f"Layer {index}: pool sizes must be positive")
    elif not isinstance(layer, Flatten):
        raise SpecError(f"Layer {index}: unknown layer type {type(layer).__name__}")


@dataclass(frozen=True)
class LayerParams:
    """Parameter tensors of one layer (weight plus optional bias)."""

    weight: Array
    bias: Optional[Array] = None

    def size(self) -> int:
        return int(self.weight.size + (self.bias.size if self.bias is not None else 0))

    def copy(self) -> "LayerParams":
        return LayerParams(
            self.weight.copy(), None if self.bias is None else self.bias.copy()
        )


ParamList = Tuple[Optional[LayerParams], ...]


def expected_param_shapes(layer: LayerSpec) -> Optional[Tuple[Tuple[int, ...], Optional[Tuple[int, ...]]]]:
    """Weight and bias shapes for a layer, or None if it has no parameters."""
    if isinstance(layer, Dense):
        return (layer.out_features, layer.in_features), (
            (layer.out_features,) if layer.bias else None
        )
    if isinstance(layer, Conv2D):
        return (
            layer.out_channels,
            layer.in_channels,
            layer.kernel_h,
            layer.kernel_w,
        ), (layer.out_channels,)
    return None


@dataclass(frozen=True)
class Model:
    """A NetworkSpec bound to parameter tensors, one entry per layer."""

    spec: NetworkSpec
    params: ParamList = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "params", tuple(self.params))
        if len(self.params) != len(self.spec.layers):
            raise ShapeError(
                f"Model has {len(self.params)} parameter slots for "
                f"{len(self.spec.layers)} layers"
            )

        for index, (layer, params) in enumerate(zip(self.spec.layers, self.params)):
            expected = expected_param_shapes(layer)
            if expected is None:
                if params is not None:
                    raise ShapeError(f"Layer {index} ({layer}) takes no parameters")
                continue
            weight_shape, bias_shape = expected
            if params is None or params.weight.shape != weight_shape:
                got = None if params is None else params.weight.shape
                raise ShapeError(f"Layer {index}: weight shape {got}, expected {weight_shape}")
            got_bias = None if params.bias is None else params.bias.shape
            if got_bias != bias_shape:
                raise ShapeError(f"Layer {index}: bias shape {got_bias}, expected {bias_shape}")

    def with_params(self, params: Sequence[Optional[LayerParams]]) -> "Model":
        """Return a new model with the same spec and different parameters."""
        return Model(self.spec, tuple(params))

    def copy(self) -> "Model":
        return self.with_params([None if p is None else p.copy() for p in self.params])

    def size(self) -> int:
        """Number of scalar parameters actually stored."""
        return sum(p.size() for p in self.params if p is not None)


def param_count(spec: NetworkSpec) -> int:
    """
    Count the parameters a spec declares.

    Args:
        spec: Network specification.

    Returns:
        Sum over parameterized layers of weight plus bias elements.
    """
    return sum(layer.param_count() for layer in spec.layers)


def _glorot_limit(layer: LayerSpec) -> float:
    if isinstance(layer, Dense):
        fan_in, fan_out = layer.in_features, layer.out_features
    else:
        assert isinstance(layer, Conv2D)
        receptive = layer.kernel_h * layer.kernel_w
        fan_in = layer.in_channels * receptive
        fan_out = layer.out_channels * receptive
    return math.sqrt(6.0 / (fan_in + fan_out))


def init_params(spec: NetworkSpec, rng: RngStream) -> Model:
    """
    Initialize a model with Glorot-uniform weights and zero biases.

    Args:
        spec: Network specification (validated on construction).
        rng: Stream consumed in layer order.

    Returns:
        A freshly initialized Model.
    """
    params: List[Optional[LayerParams]] = []
    for layer in spec.layers:
        expected = expected_param_shapes(layer)
        if expected is None:
            params.append(None)
            continue
        weight_shape, bias_shape = expected
        limit = _glorot_limit(layer)
        weight = rng.uniform(-limit, limit, weight_shape)
        bias = None if bias_shape is None else np.zeros(bias_shape, dtype=np.float64)
        params.append(LayerParams(weight, bias))

    model = Model(spec, tuple(params))
    logger.debug(f"Initialized {spec} with {model.size():,} parameters")
    return model
