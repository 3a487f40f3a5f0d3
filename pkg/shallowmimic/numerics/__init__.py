"""
Numerical primitives for shallowmimic.

This package provides the Matrix contract, a few deterministic linear
algebra helpers and seeded random streams.
"""

from shallowmimic.numerics.matrix import (
    Axis,
    Matrix,
    Vector,
    as_matrix,
    axis_stats,
    matmul,
    transpose,
)
from shallowmimic.numerics.rng import RngStream, sample_gaussian

__all__ = [
    "Axis",
    "Matrix",
    "Vector",
    "as_matrix",
    "axis_stats",
    "matmul",
    "transpose",
    "RngStream",
    "sample_gaussian",
]
