"""
Forward evaluation and manual backpropagation.

``forward`` runs a minibatch through the layer stack and records what
``backward`` needs in a ForwardCache: the input of every layer, Dense
pre-activations, the dropout masks drawn in this pass and pooling argmax
indices. ``backward`` consumes that cache together with the gradient of
the loss with respect to the logits.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
import numpy.typing as npt

from shallowmimic.exceptions import ContractError, ShapeError
from shallowmimic.nn.activations import relu
from shallowmimic.nn.conv import (
    conv2d_backward,
    conv2d_forward,
    maxpool_backward,
    maxpool_forward,
)
from shallowmimic.nn.layers import Activation, Conv2D, Dense, Dropout, Flatten, MaxPool2D
from shallowmimic.nn.network import LayerParams, Model, NetworkSpec, ParamList
from shallowmimic.numerics.matrix import Matrix, as_matrix, dense_product, shape_of
from shallowmimic.numerics.rng import RngStream
from shallowmimic.utils.constants import NumericDefaults

logger = logging.getLogger(__name__)

Array = npt.NDArray[np.float64]
Gradients = List[Optional[LayerParams]]


class Mode(str, Enum):
    """Evaluation mode: dropout is only active in TRAIN."""

    TRAIN = "train"
    EVAL = "eval"


@dataclass
class ForwardCache:
    """Per-layer bookkeeping of one forward pass."""

    spec: NetworkSpec
    params: ParamList
    batch_size: int
    mode: Mode
    inputs: List[Array] = field(default_factory=list)
    pre_activations: Dict[int, Array] = field(default_factory=dict)
    masks: Dict[int, Array] = field(default_factory=dict)
    pool_indices: Dict[int, npt.NDArray[np.int64]] = field(default_factory=dict)


def _check_batch(model: Model, batch: Matrix) -> Matrix:
    batch = as_matrix(batch, "batch")
    if batch.shape[1] != model.spec.input_dim:
        raise ShapeError(
            f"Batch of shape {shape_of(batch)} does not match network input "
            f"{model.spec.input_shape} (width {model.spec.input_dim})"
        )
    return batch


def forward(
    model: Model,
    batch: Matrix,
    mode: Mode = Mode.EVAL,
    rng: Optional[RngStream] = None,
) -> Tuple[Matrix, ForwardCache]:
    """
    Evaluate the network on a minibatch.

    Args:
        model: Network with parameters.
        batch: B x D matrix of flat input rows.
        mode: ``Mode.TRAIN`` applies inverted dropout drawn from ``rng``;
            ``Mode.EVAL`` applies none and draws nothing.
        rng: Stream for dropout masks; required in train mode when the
            network has dropout.

    Returns:
        Tuple of (raw logits B x C, cache for ``backward``).

    Raises:
        ShapeError: If the batch width does not match the network input.
        ContractError: If train mode needs randomness but no stream is given.
    """
    batch = _check_batch(model, batch)
    size = batch.shape[0]
    spec = model.spec
    cache = ForwardCache(spec=spec, params=model.params, batch_size=size, mode=Mode(mode))

    x: Array = batch
    if len(spec.input_shape) == 3:
        x = batch.reshape((size,) + spec.input_shape)

    for index, (layer, params) in enumerate(zip(spec.layers, model.params)):
        cache.inputs.append(x)
        if isinstance(layer, Dense):
            assert params is not None
            pre = dense_product(x, params.weight)
            if params.bias is not None:
                pre = pre + params.bias
            if layer.activation is Activation.RELU:
                cache.pre_activations[index] = pre
                x = relu(pre)
            else:
                x = pre
        elif isinstance(layer, Dropout):
            if cache.mode is Mode.TRAIN and layer.rate > 0.0:
                if rng is None:
                    raise ContractError("Train-mode dropout requires an RngStream")
                mask = rng.dropout_mask(x.shape, layer.rate)
                cache.masks[index] = mask
                x = x * mask
        elif isinstance(layer, Conv2D):
            assert params is not None
            x = conv2d_forward(layer, params, x)
        elif isinstance(layer, MaxPool2D):
            x, argmax = maxpool_forward(layer, x)
            cache.pool_indices[index] = argmax
        elif isinstance(layer, Flatten):
            x = x.reshape(size, -1)

    return np.ascontiguousarray(x), cache


def backward(model: Model, cache: ForwardCache, dlogits: Matrix) -> Gradients:
    """
    Backpropagate a logit gradient through the network.

    Args:
        model: The model used for the forward pass.
        cache: Cache returned by ``forward`` for this model and batch.
        dlogits: Gradient of the scalar loss w.r.t. the logits (B x C).

    Returns:
        One entry per layer: parameter gradients for Dense/Conv2D layers,
        None for parameter-free layers.

    Raises:
        ContractError: If the cache was produced by a different network,
            by other parameter tensors (a stale cache), or does not match
            the gradient's batch size.
    """
    spec = model.spec
    if cache.spec != spec or len(cache.inputs) != len(spec.layers):
        raise ContractError("ForwardCache was produced by a different network")
    if len(cache.params) != len(model.params) or any(
        cached is not current for cached, current in zip(cache.params, model.params)
    ):
        raise ContractError("ForwardCache is stale: it was produced with other parameters")

    if dlogits.shape != (cache.batch_size, spec.output_dim):
        raise ContractError(
            f"dlogits of shape {dlogits.shape} does not match cached batch "
            f"({cache.batch_size}, {spec.output_dim})"
        )

    grads: Gradients = [None] * len(spec.layers)
    delta: Array = np.asarray(dlogits, dtype=np.float64)

    for index in range(len(spec.layers) - 1, -1, -1):
        layer = spec.layers[index]
        params = model.params[index]
        x = cache.inputs[index]
        if isinstance(layer, Dense):
            assert params is not None
            if layer.activation is Activation.RELU:
                delta = delta * (cache.pre_activations[index] > 0.0)
            d_weight = delta.T @ x
            d_bias = delta.sum(axis=0) if params.bias is not None else None
            grads[index] = LayerParams(d_weight, d_bias)
            delta = delta @ params.weight
        elif isinstance(layer, Dropout):
            mask = cache.masks.get(index)
            if mask is not None:
                delta = delta * mask
        elif isinstance(layer, Conv2D):
            assert params is not None
            delta, grads[index] = conv2d_backward(layer, params, x, delta)
        elif isinstance(layer, MaxPool2D):
            delta = maxpool_backward(layer, x.shape, cache.pool_indices[index], delta)
        elif isinstance(layer, Flatten):
            delta = delta.reshape(x.shape)

    return grads


def predict_logits(
    model: Model, features: Matrix, batch_size: int = NumericDefaults.PREDICT_BATCH_SIZE
) -> Matrix:
    """
    Eval-mode logits for every row, computed in fixed-size batches.

    Row ``i`` of the result corresponds to row ``i`` of ``features``; the
    batch size does not change the result.
    """
    features = _check_batch(model, features)
    if batch_size < 1:
        raise ContractError(f"batch_size must be positive. Got {batch_size}")

    n = features.shape[0]
    out = np.empty((n, model.spec.output_dim), dtype=np.float64)
    for start in range(0, n, batch_size):
        stop = min(start + batch_size, n)
        out[start:stop], _ = forward(model, features[start:stop], Mode.EVAL)
    return out
