"""
Stochastic gradient descent with heavy-ball momentum.
"""

from typing import List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt

from shallowmimic.exceptions import ShapeError
from shallowmimic.nn.network import LayerParams

Array = npt.NDArray[np.float64]
ParamSlots = Sequence[Optional[LayerParams]]


def sgd_momentum_step(
    params: Array, grads: Array, velocity: Array, lr: float, momentum: float
) -> Tuple[Array, Array]:
    """
    One heavy-ball update of a single tensor.

    ``v <- momentum * v - lr * g`` then ``theta <- theta + v``.

    Args:
        params: Current parameter tensor.
        grads: Gradient of the loss with respect to ``params``.
        velocity: Current velocity.
        lr: Learning rate.
        momentum: Momentum coefficient.

    Returns:
        Tuple of (new params, new velocity); inputs are not modified.

    Raises:
        ShapeError: If the three tensors disagree in shape.

    Example:
        >>> theta, v = sgd_momentum_step(np.zeros(1), np.ones(1), np.zeros(1), 0.1, 0.9)
        >>> theta
        array([-0.1])
    """
    if not params.shape == grads.shape == velocity.shape:
        raise ShapeError(
            f"SGD tensors disagree: params {params.shape}, grads {grads.shape}, "
            f"velocity {velocity.shape}"
        )
    new_velocity = momentum * velocity - lr * grads
    return params + new_velocity, new_velocity


def zero_velocity(params: ParamSlots) -> List[Optional[LayerParams]]:
    """Velocity buffers shaped like ``params``, all zero."""
    return [
        None
        if p is None
        else LayerParams(
            np.zeros_like(p.weight), None if p.bias is None else np.zeros_like(p.bias)
        )
        for p in params
    ]


def apply_momentum_step(
    params: ParamSlots,
    grads: ParamSlots,
    velocity: ParamSlots,
    lr: float,
    momentum: float,
) -> Tuple[List[Optional[LayerParams]], List[Optional[LayerParams]]]:
    """Apply ``sgd_momentum_step`` to every weight and bias of a layer list."""
    new_params: List[Optional[LayerParams]] = []
    new_velocity: List[Optional[LayerParams]] = []
    for p, g, v in zip(params, grads, velocity):
        if p is None:
            new_params.append(None)
            new_velocity.append(None)
            continue
        if g is None or v is None:
            raise ShapeError("Missing gradient or velocity for a parameterized layer")
        weight, v_weight = sgd_momentum_step(p.weight, g.weight, v.weight, lr, momentum)
        bias = v_bias = None
        if p.bias is not None:
            if g.bias is None or v.bias is None:
                raise ShapeError("Missing bias gradient or velocity")
            bias, v_bias = sgd_momentum_step(p.bias, g.bias, v.bias, lr, momentum)
        new_params.append(LayerParams(weight, bias))
        new_velocity.append(LayerParams(v_weight, v_bias))
    return new_params, new_velocity
