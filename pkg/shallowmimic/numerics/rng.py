"""
Seeded random streams.

Every random draw in shallowmimic goes through an RngStream. A stream is
a numpy ``Generator`` driven by the PCG64 bit generator, seeded through a
``SeedSequence`` built from ``(seed, spawn_key)``. The root stream for a
seed therefore reproduces ``numpy.random.default_rng(seed)`` exactly, and
child streams are derived deterministically from the parent's seed plus a
stream id, so concurrent consumers never share state.
"""

import logging
from typing import Tuple, Union

import numpy as np
import numpy.typing as npt

from shallowmimic.exceptions import DomainError
from shallowmimic.numerics.matrix import Matrix
from shallowmimic.utils.validators import validate_seed

logger = logging.getLogger(__name__)

ShapeLike = Union[int, Tuple[int, ...]]


class RngStream:
    """Single-consumer random stream with portable seeding.

    Attributes:
        seed: The unsigned 64-bit root seed.
        spawn_key: Path of stream ids from the root stream to this one.
    """

    def __init__(self, seed: int, spawn_key: Tuple[int, ...] = ()) -> None:
        validate_seed(seed)
        self.seed = int(seed)
        self.spawn_key = tuple(int(k) for k in spawn_key)
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=self.spawn_key)
        self._generator = np.random.Generator(np.random.PCG64(sequence))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, spawn_key={self.spawn_key})"

    def spawn(self, stream_id: int) -> "RngStream":
        """
        Derive an independent child stream.

        The child depends only on this stream's seed, its spawn key and
        ``stream_id``, never on how many draws the parent has made.
        """
        return RngStream(self.seed, self.spawn_key + (stream_id,))

    def random(self, size: ShapeLike) -> npt.NDArray[np.float64]:
        """Uniform draws on [0, 1)."""
        return self._generator.random(size)

    def uniform(self, low: float, high: float, size: ShapeLike) -> npt.NDArray[np.float64]:
        """Uniform draws on [low, high)."""
        return self._generator.uniform(low, high, size)

    def standard_normal(self, size: ShapeLike) -> npt.NDArray[np.float64]:
        """Standard normal draws."""
        return self._generator.standard_normal(size)

    def integers(self, low: int, high: int, size: ShapeLike) -> npt.NDArray[np.int64]:
        """Integers on [low, high)."""
        return self._generator.integers(low, high, size=size, dtype=np.int64)

    def permutation(self, n: int) -> npt.NDArray[np.int64]:
        """A uniformly random permutation of ``range(n)``."""
        return self._generator.permutation(n).astype(np.int64)

    def dropout_mask(self, shape: Tuple[int, ...], rate: float) -> npt.NDArray[np.float64]:
        """
        Draw an inverted-dropout mask.

        Kept units carry ``1 / (1 - rate)`` and dropped units carry 0.
        """
        keep = self._generator.random(shape) >= rate
        return keep.astype(np.float64) / (1.0 - rate)


def sample_gaussian(
    rng: RngStream, rows: int, cols: int, mu: float = 0.0, sigma: float = 1.0
) -> Matrix:
    """
    Draw an i.i.d. normal matrix.

    Args:
        rng: Stream to draw from.
        rows: Number of rows.
        cols: Number of columns.
        mu: Mean of every entry.
        sigma: Standard deviation of every entry.

    Returns:
        A rows x cols matrix; exactly ``mu`` everywhere when sigma is 0.

    Raises:
        DomainError: If sigma is negative or the shape is negative.
    """
    if sigma < 0:
        raise DomainError(f"sigma must be non-negative. Got: {sigma}")

    if rows < 0 or cols < 0:
        raise DomainError(f"Matrix shape must be non-negative. Got: {rows}x{cols}")

    return mu + sigma * rng.standard_normal((rows, cols))
