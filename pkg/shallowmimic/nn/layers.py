"""
Layer specifications.

Each layer is an immutable dataclass describing its hyperparameters. A
layer knows the shape it produces from a given input shape and how many
parameters it owns; the parameter tensors themselves live in the Model.
Shapes are tuples: ``(features,)`` for flat activations and
``(channels, height, width)`` for image activations.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Tuple, Union

from shallowmimic.exceptions import SpecError

Shape = Tuple[int, ...]


class Activation(str, Enum):
    """Activation applied after a Dense layer."""

    IDENTITY = "identity"
    RELU = "relu"


@dataclass(frozen=True)
class Dense:
    """Fully connected layer ``y = f(W x + b)`` with ``W`` of shape out x in.

    A Dense layer with identity activation that feeds another Dense layer
    is a bottleneck: it factorizes that layer's weight matrix.
    """

    in_features: int
    out_features: int
    activation: Activation = Activation.RELU
    bias: bool = True

    def output_shape(self, input_shape: Shape) -> Shape:
        if input_shape != (self.in_features,):
            raise SpecError(
                f"Dense({self.in_features}->{self.out_features}) "
                f"cannot take input of shape {input_shape}"
            )
        return (self.out_features,)

    def param_count(self) -> int:
        return self.in_features * self.out_features + (self.out_features if self.bias else 0)

    def __str__(self) -> str:
        suffix = "L" if self.activation is Activation.IDENTITY else ""
        return f"Dense({self.in_features}->{self.out_features}{suffix})"


@dataclass(frozen=True)
class Dropout:
    """Inverted dropout with drop probability ``rate``."""

    rate: float

    def output_shape(self, input_shape: Shape) -> Shape:
        return input_shape

    def param_count(self) -> int:
        return 0


@dataclass(frozen=True)
class Conv2D:
    """Valid (unpadded), stride-1 cross-correlation."""

    in_channels: int
    out_channels: int
    kernel_h: int
    kernel_w: int

    def output_shape(self, input_shape: Shape) -> Shape:
        if len(input_shape) != 3 or input_shape[0] != self.in_channels:
            raise SpecError(
                f"Conv2D expects ({self.in_channels}, h, w) input. Got {input_shape}"
            )
        _, h, w = input_shape
        if h < self.kernel_h or w < self.kernel_w:
            raise SpecError(
                f"Conv2D kernel {self.kernel_h}x{self.kernel_w} is larger than input {h}x{w}"
            )
        return (self.out_channels, h - self.kernel_h + 1, w - self.kernel_w + 1)

    def param_count(self) -> int:
        return self.out_channels * self.in_channels * self.kernel_h * self.kernel_w + self.out_channels


@dataclass(frozen=True)
class MaxPool2D:
    """Non-overlapping max pooling; ragged edges are truncated."""

    pool_h: int
    pool_w: int

    def output_shape(self, input_shape: Shape) -> Shape:
        if len(input_shape) != 3:
            raise SpecError(f"MaxPool2D expects (c, h, w) input. Got {input_shape}")
        c, h, w = input_shape
        if h < self.pool_h or w < self.pool_w:
            raise SpecError(
                f"MaxPool2D window {self.pool_h}x{self.pool_w} is larger than input {h}x{w}"
            )
        return (c, h // self.pool_h, w // self.pool_w)

    def param_count(self) -> int:
        return 0


@dataclass(frozen=True)
class Flatten:
    """Reshape (c, h, w) activations into flat rows."""

    def output_shape(self, input_shape: Shape) -> Shape:
        size = 1
        for d in input_shape:
            size *= d
        return (size,)

    def param_count(self) -> int:
        return 0


LayerSpec = Union[Dense, Dropout, Conv2D, MaxPool2D, Flatten]

PARAMETERIZED = (Dense, Conv2D)


def is_bottleneck(layer: LayerSpec) -> bool:
    """Whether the layer is a linear (identity-activation) Dense layer."""
    return isinstance(layer, Dense) and layer.activation is Activation.IDENTITY
