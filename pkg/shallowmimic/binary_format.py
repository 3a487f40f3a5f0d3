"""
Little-endian binary container primitives.

Model files and preprocessing sidecars share one layout: a 4-byte magic
string, a u32 format version, then a sequence of u32 counts/tags, f64
scalars, length-prefixed UTF-8 strings and row-major f64 arrays. This
module holds the writer and reader used by both.
"""

import struct
from typing import List, Tuple

import numpy as np
import numpy.typing as npt

from shallowmimic.exceptions import SerializationError

_U32 = struct.Struct("<I")
_F64 = struct.Struct("<d")


class BinaryWriter:
    """Accumulates a container payload in memory."""

    def __init__(self, magic: bytes, version: int) -> None:
        self._chunks: List[bytes] = [magic]
        self.u32(version)

    def u32(self, value: int) -> None:
        self._chunks.append(_U32.pack(int(value)))

    def f64(self, value: float) -> None:
        self._chunks.append(_F64.pack(float(value)))

    def text(self, value: str) -> None:
        encoded = value.encode("utf-8")
        self.u32(len(encoded))
        self._chunks.append(encoded)

    def array(self, values: npt.NDArray[np.float64]) -> None:
        """Write a row-major float64 array without its shape."""
        self._chunks.append(np.ascontiguousarray(values, dtype="<f8").tobytes())

    def shaped_array(self, values: npt.NDArray[np.float64]) -> None:
        """Write an array preceded by its rank and dimensions."""
        self.u32(values.ndim)
        for dim in values.shape:
            self.u32(dim)
        self.array(values)

    def getvalue(self) -> bytes:
        return b"".join(self._chunks)


class BinaryReader:
    """Sequential reader over a container payload."""

    def __init__(self, payload: bytes, magic: bytes, supported_version: int) -> None:
        self._payload = payload
        self._offset = 0
        found = self._take(len(magic))
        if found != magic:
            raise SerializationError(f"Bad magic {found!r}, expected {magic!r}")
        self.version = self.u32()
        if self.version != supported_version:
            raise SerializationError(
                f"Unsupported format version {self.version} (supported: {supported_version})"
            )

    def _take(self, size: int) -> bytes:
        end = self._offset + size
        if end > len(self._payload):
            raise SerializationError(
                f"Truncated file: needed {size} bytes at offset {self._offset}"
            )
        chunk = self._payload[self._offset : end]
        self._offset = end
        return chunk

    def u32(self) -> int:
        return int(_U32.unpack(self._take(_U32.size))[0])

    def f64(self) -> float:
        return float(_F64.unpack(self._take(_F64.size))[0])

    def text(self) -> str:
        size = self.u32()
        try:
            return self._take(size).decode("utf-8")
        except UnicodeDecodeError as e:
            raise SerializationError(f"Invalid UTF-8 string in file: {e}") from e

    def array(self, shape: Tuple[int, ...]) -> npt.NDArray[np.float64]:
        count = 1
        for dim in shape:
            count *= dim
        raw = self._take(count * 8)
        return np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)

    def shaped_array(self) -> npt.NDArray[np.float64]:
        rank = self.u32()
        shape = tuple(self.u32() for _ in range(rank))
        return self.array(shape)

    def expect_end(self) -> None:
        if self._offset != len(self._payload):
            raise SerializationError(
                f"Trailing data: {len(self._payload) - self._offset} unread bytes"
            )
