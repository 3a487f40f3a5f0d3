"""
Neural network layers, evaluation and backpropagation.

This package provides the layer and network specifications, parameter
initialization, forward/backward passes, the conv+pool kernels, bottleneck
absorption, architecture builders and model serialization.
"""

from shallowmimic.nn.absorb import absorb_bottleneck, find_bottleneck
from shallowmimic.nn.activations import log_softmax_rows, relu, softmax, softmax_rows
from shallowmimic.nn.builders import (
    format_hidden_units,
    hidden_unit_counts,
    mlp_spec,
    shallow_spec,
)
from shallowmimic.nn.conv import (
    conv2d_backward,
    conv2d_forward,
    maxpool_backward,
    maxpool_forward,
)
from shallowmimic.nn.layers import (
    Activation,
    Conv2D,
    Dense,
    Dropout,
    Flatten,
    LayerSpec,
    MaxPool2D,
    is_bottleneck,
)
from shallowmimic.nn.network import (
    LayerParams,
    Model,
    NetworkSpec,
    init_params,
    param_count,
)
from shallowmimic.nn.propagation import (
    ForwardCache,
    Gradients,
    Mode,
    backward,
    forward,
    predict_logits,
)
from shallowmimic.nn.serialization import (
    load_model,
    model_digest,
    model_from_bytes,
    model_to_bytes,
    save_model,
)

__all__ = [
    # Layers
    "Activation",
    "Conv2D",
    "Dense",
    "Dropout",
    "Flatten",
    "LayerSpec",
    "MaxPool2D",
    "is_bottleneck",
    # Networks
    "LayerParams",
    "Model",
    "NetworkSpec",
    "init_params",
    "param_count",
    # Propagation
    "ForwardCache",
    "Gradients",
    "Mode",
    "backward",
    "forward",
    "predict_logits",
    # Activations and kernels
    "log_softmax_rows",
    "relu",
    "softmax",
    "softmax_rows",
    "conv2d_backward",
    "conv2d_forward",
    "maxpool_backward",
    "maxpool_forward",
    # Architectures
    "absorb_bottleneck",
    "find_bottleneck",
    "format_hidden_units",
    "hidden_unit_counts",
    "mlp_spec",
    "shallow_spec",
    # Serialization
    "load_model",
    "model_digest",
    "model_from_bytes",
    "model_to_bytes",
    "save_model",
]
