"""
Activation functions.

Softmax is computed with max-subtraction so that large logits never
overflow; log-softmax goes through ``scipy.special.logsumexp``.
"""

import numpy as np
import numpy.typing as npt
from scipy.special import logsumexp

from shallowmimic.exceptions import DomainError
from shallowmimic.numerics.matrix import Matrix

Array = npt.NDArray[np.float64]


def relu(x: Array) -> Array:
    """Rectified linear unit."""
    return np.maximum(x, 0.0)


def softmax(z: Array) -> Array:
    """
    Softmax of a single row vector.

    Args:
        z: Finite logits of length C.

    Returns:
        Probabilities ``exp(z - max z) / sum(exp(z - max z))``.

    Raises:
        DomainError: If any logit is NaN or infinite.

    Example:
        >>> softmax(np.array([1.0, 1.0]))
        array([0.5, 0.5])
    """
    z = np.asarray(z, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise DomainError("softmax input contains NaN or infinite entries")
    return softmax_rows(z.reshape(1, -1)).reshape(z.shape)


def softmax_rows(logits: Matrix) -> Matrix:
    """Row-wise softmax of a B x C logit matrix."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def log_softmax_rows(logits: Matrix) -> Matrix:
    """Row-wise log-softmax of a B x C logit matrix."""
    return logits - logsumexp(logits, axis=1, keepdims=True)
