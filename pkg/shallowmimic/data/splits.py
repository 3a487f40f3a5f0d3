"""
Dataset splitting and resampling.
"""

import logging
from typing import List, Sequence

import numpy as np

from shallowmimic.data.dataset import Dataset
from shallowmimic.exceptions import ConfigurationError
from shallowmimic.numerics.rng import RngStream

logger = logging.getLogger(__name__)


def split(dataset: Dataset, fractions: Sequence[float], seed: int) -> List[Dataset]:
    """
    Shuffle rows with a seeded permutation and slice them contiguously.

    Args:
        dataset: Dataset to split.
        fractions: Positive fractions summing to at most 1; part ``i``
            receives ``floor(fraction_i * N)`` rows, except that fractions
            summing to exactly 1 give the last part every remaining row.
        seed: Seed for the permutation.

    Returns:
        One dataset per fraction. No row appears in two parts.

    Raises:
        ConfigurationError: On empty, non-positive or oversized fractions.
    """
    if not fractions:
        raise ConfigurationError("At least one split fraction is required")
    if any(f <= 0 for f in fractions):
        raise ConfigurationError(f"Split fractions must be positive. Got {list(fractions)}")
    total = float(sum(fractions))
    if total > 1.0 + 1e-12:
        raise ConfigurationError(f"Split fractions sum to {total}, which exceeds 1")

    n = len(dataset)
    order = RngStream(seed).permutation(n)
    bounds = [0]
    for fraction in fractions:
        bounds.append(bounds[-1] + int(np.floor(fraction * n)))
    if abs(total - 1.0) <= 1e-12:
        bounds[-1] = n

    parts = [dataset.subset(order[start:stop]) for start, stop in zip(bounds, bounds[1:])]
    logger.debug(f"Split {n} rows into {[len(p) for p in parts]}")
    return parts


def bootstrap(dataset: Dataset, rng: RngStream) -> Dataset:
    """Resample N rows with replacement."""
    n = len(dataset)
    indices = rng.integers(0, n, n) if n else np.zeros(0, dtype=np.int64)
    return dataset.subset(indices)
