"""
Dense matrix helpers.

A Matrix is a two-dimensional, C-ordered ``numpy.ndarray`` of 64-bit
reals. This module holds the boundary validators that enforce that
contract, plus the few linear-algebra primitives the other modules share.
"""

import logging
from enum import Enum
from typing import Any, Tuple

import numpy as np
import numpy.typing as npt

from shallowmimic.exceptions import DomainError, ShapeError

logger = logging.getLogger(__name__)

Matrix = npt.NDArray[np.float64]
Vector = npt.NDArray[np.float64]


class Axis(str, Enum):
    """Axis along which statistics are aggregated.

    ``ROWS`` aggregates over the rows and yields one value per column;
    ``COLS`` aggregates over the columns and yields one value per row.
    """

    ROWS = "rows"
    COLS = "cols"


def as_matrix(data: Any, name: str = "matrix") -> Matrix:
    """
    Convert input to a validated float64 Matrix.

    Args:
        data: Array-like with two dimensions.
        name: Label used in error messages.

    Returns:
        A C-contiguous float64 array.

    Raises:
        ShapeError: If the input is not two-dimensional.
        DomainError: If any entry is NaN or infinite.
    """
    array = np.ascontiguousarray(data, dtype=np.float64)

    if array.ndim != 2:
        raise ShapeError(f"{name} must be two-dimensional. Got shape {array.shape}")

    if not np.all(np.isfinite(array)):
        raise DomainError(f"{name} contains NaN or infinite entries")

    return array


def shape_of(m: npt.NDArray[Any]) -> str:
    """Format a shape as ``RxC`` for error messages."""
    return "x".join(str(d) for d in m.shape)


def dense_product(x: Matrix, weight: Matrix) -> Matrix:
    """
    Compute ``x @ weight.T`` one output cell at a time.

    Each cell is the dot product of a row of ``x`` with a row of
    ``weight``, reduced along the contiguous last axis by numpy's own
    einsum loop rather than BLAS. The summation order of a cell depends
    only on the reduction length, so a row produces the same bits whether
    it is evaluated alone or inside a larger batch.
    """
    return np.einsum("bi,oi->bo", x, weight)


def matmul(a: Matrix, b: Matrix) -> Matrix:
    """
    Multiply two matrices.

    Every output cell is reduced in a fixed order (see ``dense_product``).

    Args:
        a: Left factor, shape m x k.
        b: Right factor, shape k x n.

    Returns:
        The m x n product.

    Raises:
        ShapeError: If the inner dimensions disagree.
    """
    a = as_matrix(a, "left factor")
    b = as_matrix(b, "right factor")

    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"Cannot multiply {shape_of(a)} by {shape_of(b)}: inner dimensions differ"
        )

    return dense_product(a, np.ascontiguousarray(b.T))


def transpose(m: Matrix) -> Matrix:
    """Return a C-ordered copy of the transpose."""
    return np.ascontiguousarray(as_matrix(m).T)


def axis_stats(m: Matrix, axis: Axis = Axis.ROWS) -> Tuple[Vector, Vector]:
    """
    Compute mean and population standard deviation along an axis.

    Args:
        m: Input matrix.
        axis: ``Axis.ROWS`` for per-column statistics, ``Axis.COLS`` for
            per-row statistics.

    Returns:
        Tuple of (mean, std) vectors; std divides by n, not n - 1.

    Raises:
        DomainError: If the matrix is empty.
    """
    m = as_matrix(m)

    if m.size == 0:
        raise DomainError(f"Cannot compute statistics of an empty {shape_of(m)} matrix")

    np_axis = 0 if Axis(axis) is Axis.ROWS else 1
    mean = m.mean(axis=np_axis)
    std = m.std(axis=np_axis, ddof=0)
    return mean, std


def standardize_columns(m: Matrix, mean: Vector, std: Vector, epsilon: float) -> Matrix:
    """Apply ``(m - mean) / max(std, epsilon)`` column-wise."""
    return (m - mean) / np.maximum(std, epsilon)
