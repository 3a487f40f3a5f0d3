"""
Logit regression targets.

Teacher logits may be standardized per output column across the transfer
set before the student regresses them. The (mu, sigma) of every column
are always kept, so student predictions can be mapped back to raw logits
either at evaluation time or permanently by folding the map into the
student's output layer.
"""

import logging
from dataclasses import dataclass

import numpy as np

from shallowmimic.data.dataset import LogitScale
from shallowmimic.exceptions import ContractError, ShapeError
from shallowmimic.nn.layers import Dense
from shallowmimic.nn.network import LayerParams, Model, NetworkSpec
from shallowmimic.numerics.matrix import Axis, Matrix, Vector, axis_stats, standardize_columns
from shallowmimic.utils.constants import NumericDefaults

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LogitTargets:
    """Teacher logits with their per-column statistics.

    Attributes:
        logits: N x C matrix, normalized when ``normalized`` is set.
        mu: Column means of the raw logits.
        sigma: Column population standard deviations of the raw logits.
        normalized: Whether ``logits`` hold standardized values.
        epsilon: Floor applied to sigma during normalization.
    """

    logits: Matrix
    mu: Vector
    sigma: Vector
    normalized: bool
    epsilon: float = NumericDefaults.EPSILON

    @property
    def scale(self) -> LogitScale:
        """Affine map from normalized to raw logits, using the floored sigma."""
        return LogitScale(self.mu, np.maximum(self.sigma, self.epsilon))

    def denormalize(self) -> Matrix:
        """Raw logits: ``logits * max(sigma, eps) + mu`` if normalized, else a copy."""
        if not self.normalized:
            return self.logits.copy()
        return self.scale.denormalize(self.logits)


def raw_targets(raw: Matrix) -> LogitTargets:
    """Wrap unnormalized logits, still recording their column statistics."""
    if raw.shape[0] == 0:
        columns = raw.shape[1]
        return LogitTargets(raw, np.zeros(columns), np.ones(columns), normalized=False)
    mu, sigma = axis_stats(raw, Axis.ROWS)
    return LogitTargets(raw, mu, sigma, normalized=False)


def normalize_logits(raw: Matrix, epsilon: float = NumericDefaults.EPSILON) -> LogitTargets:
    """
    Standardize every logit column across the rows.

    Args:
        raw: N x C teacher logits (N >= 1).
        epsilon: Floor on sigma; constant columns map to 0.

    Returns:
        LogitTargets with ``(raw - mu) / max(sigma, eps)`` and the stats.

    Example:
        >>> t = normalize_logits(np.array([[1.0, 3.0], [3.0, 5.0]]))
        >>> t.logits.tolist(), t.mu.tolist()
        ([[-1.0, -1.0], [1.0, 1.0]], [2.0, 4.0])
    """
    mu, sigma = axis_stats(raw, Axis.ROWS)
    degenerate = int(np.count_nonzero(sigma < epsilon))
    if degenerate:
        logger.warning(f"{degenerate} logit column(s) are constant; normalized to 0")
    normalized = standardize_columns(raw, mu, sigma, epsilon)
    return LogitTargets(normalized, mu, sigma, normalized=True, epsilon=epsilon)


def fold_logit_scale(model: Model, scale: LogitScale) -> Model:
    """
    Fold a denormalization map into the output layer.

    The last Dense layer ``W x + b`` becomes ``diag(sigma) W x + sigma * b
    + mu``, so the returned model emits raw logits directly.

    Raises:
        ContractError: If the model does not end in a Dense layer.
        ShapeError: If the scale width differs from the output width.
    """
    index = len(model.spec.layers) - 1
    layer = model.spec.layers[index]
    params = model.params[index]
    if not isinstance(layer, Dense) or params is None:
        raise ContractError("Only models ending in a Dense layer can absorb a logit scale")
    if scale.mu.shape != (layer.out_features,):
        raise ShapeError(
            f"Logit scale has {scale.mu.shape[0]} columns, output layer has {layer.out_features}"
        )

    bias = params.bias if params.bias is not None else np.zeros(layer.out_features)
    folded = LayerParams(params.weight * scale.sigma[:, None], scale.sigma * bias + scale.mu)

    layers = list(model.spec.layers)
    if not layer.bias:
        layers[index] = Dense(layer.in_features, layer.out_features, layer.activation, bias=True)
    spec = NetworkSpec(model.spec.input_shape, tuple(layers), model.spec.output_dim)

    all_params = list(model.params)
    all_params[index] = folded
    logger.debug("Folded logit denormalization into the output layer")
    return Model(spec, tuple(all_params))
