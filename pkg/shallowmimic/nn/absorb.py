"""
Bottleneck absorption.

A linear bottleneck ``Dense(D, k, identity)`` followed by ``Dense(k, H)``
computes ``f(U (V x + c) + b)``. Replacing the pair with a single
``Dense(D, H)`` whose weight is ``U V`` and bias is ``U c + b`` leaves the
network function unchanged while trading the factorized O(k(H + D))
parameters for the full O(HD) matrix.
"""

import logging
from typing import List, Optional

import numpy as np

from shallowmimic.exceptions import ContractError
from shallowmimic.nn.layers import Dense, LayerSpec, is_bottleneck
from shallowmimic.nn.network import LayerParams, Model, NetworkSpec, param_count

logger = logging.getLogger(__name__)


def find_bottleneck(spec: NetworkSpec) -> Optional[int]:
    """Index of the first linear Dense layer directly followed by a Dense layer."""
    for index in range(len(spec.layers) - 1):
        if is_bottleneck(spec.layers[index]) and isinstance(spec.layers[index + 1], Dense):
            return index
    return None


def absorb_bottleneck(model: Model) -> Model:
    """
    Merge the first bottleneck pair into a single Dense layer.

    Args:
        model: Model containing ``Dense(D, k, identity) -> Dense(k, H, f)``.

    Returns:
        A model with the pair replaced by ``Dense(D, H, f)``, weight
        ``U @ V`` and bias ``U @ c + b``; its forward outputs match the
        original up to rounding.

    Raises:
        ContractError: If the model has no absorbable pair.
    """
    index = find_bottleneck(model.spec)
    if index is None:
        raise ContractError(f"No absorbable bottleneck in {model.spec}")

    linear = model.spec.layers[index]
    following = model.spec.layers[index + 1]
    assert isinstance(linear, Dense) and isinstance(following, Dense)
    v_params = model.params[index]
    u_params = model.params[index + 1]
    assert v_params is not None and u_params is not None

    u, v = u_params.weight, v_params.weight
    c = v_params.bias if v_params.bias is not None else np.zeros(linear.out_features)
    b = u_params.bias if u_params.bias is not None else np.zeros(following.out_features)

    merged_layer = Dense(linear.in_features, following.out_features, following.activation, bias=True)
    merged_params = LayerParams(u @ v, u @ c + b)

    layers: List[LayerSpec] = list(model.spec.layers)
    layers[index : index + 2] = [merged_layer]
    params = list(model.params)
    params[index : index + 2] = [merged_params]

    spec = NetworkSpec(model.spec.input_shape, tuple(layers), model.spec.output_dim)
    merged = Model(spec, tuple(params))

    logger.info(
        f"Absorbed {linear} -> {following} at layer {index}: "
        f"{param_count(model.spec):,} -> {param_count(spec):,} parameters"
    )
    return merged
