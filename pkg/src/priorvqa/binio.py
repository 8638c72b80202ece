"""Byte-level plumbing shared by the feature and parameter file formats.

Both formats are little-endian with a trailing CRC32 over everything that
precedes it.  Files are small enough to read whole; a cursor walks the
payload and every take is bounds-checked so a short file turns into a
TruncationError instead of a struct exception.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from .errors import BadMagicError, ChecksumError, ShapeOverflowError, TruncationError

# declared extents whose product exceeds this are rejected before any
# allocation; 2^31 elements is far beyond desk scale
MAX_ELEMENTS = 1 << 31


def checked_payload(data: bytes, path: str) -> bytes:
    """Split off and verify the trailing CRC32; returns the payload bytes."""
    if len(data) < 4:
        raise TruncationError(f"{path}: {len(data)} bytes is too short for a checksum")
    payload, tail = data[:-4], data[-4:]
    stored = struct.unpack("<I", tail)[0]
    actual = zlib.crc32(payload)
    if stored != actual:
        raise ChecksumError(f"{path}: checksum {actual:#010x} != stored {stored:#010x}")
    return payload


class ByteReader:
    def __init__(self, payload: bytes, path: str):
        self._buf = payload
        self._pos = 0
        self._path = path

    def take(self, n: int) -> bytes:
        if self._pos + n > len(self._buf):
            raise TruncationError(
                f"{self._path}: needed {n} bytes at offset {self._pos}, "
                f"only {len(self._buf) - self._pos} remain"
            )
        out = self._buf[self._pos : self._pos + n]
        self._pos += n
        return out

    def magic(self, expected: bytes):
        got = self.take(len(expected))
        if got != expected:
            raise BadMagicError(f"{self._path}: magic {got!r}, expected {expected!r}")

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def f32(self) -> float:
        return struct.unpack("<f", self.take(4))[0]

    def f32_array(self, count: int, shape) -> np.ndarray:
        """Read f32 values and widen to f64."""
        raw = np.frombuffer(self.take(4 * count), dtype="<f4")
        return raw.astype(np.float64).reshape(shape)

    def f64_array(self, count: int, shape) -> np.ndarray:
        raw = np.frombuffer(self.take(8 * count), dtype="<f8")
        return raw.astype(np.float64).reshape(shape)

    def utf8(self, n: int) -> str:
        return self.take(n).decode("utf-8")

    def at_end(self) -> bool:
        return self._pos == len(self._buf)

    def expect_end(self):
        if not self.at_end():
            raise TruncationError(
                f"{self._path}: {len(self._buf) - self._pos} unexpected trailing bytes"
            )

    def check_extents(self, extents, context: str):
        prod = 1
        for e in extents:
            if e < 1:
                raise ShapeOverflowError(f"{self._path}: {context}: zero extent in {extents}")
            prod *= e
            if prod > MAX_ELEMENTS:
                raise ShapeOverflowError(
                    f"{self._path}: {context}: {tuple(extents)} exceeds {MAX_ELEMENTS} elements"
                )
        return prod


class ByteWriter:
    def __init__(self):
        self._chunks: list[bytes] = []

    def raw(self, b: bytes):
        self._chunks.append(b)

    def u32(self, v: int):
        self._chunks.append(struct.pack("<I", v))

    def f32(self, v: float):
        self._chunks.append(struct.pack("<f", v))

    def f32_array(self, arr: np.ndarray):
        self._chunks.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())

    def f64_array(self, arr: np.ndarray):
        self._chunks.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())

    def utf8(self, s: str):
        b = s.encode("utf-8")
        self.u32(len(b))
        self._chunks.append(b)

    def finish_with_crc(self) -> bytes:
        payload = b"".join(self._chunks)
        return payload + struct.pack("<I", zlib.crc32(payload))
