"""Standalone PFVF writer.

PFVF is the feature-interchange contract between this exporter and the
consuming model package; the two sides deliberately keep independent
implementations of the byte layout so either one catches drift in the
other. Layout, little-endian throughout:

    magic  "PFVF"
    u32    version (1)
    u32 x5 T, N, C_feat, C_cont, C_dist
    u32    flags (bit 0: MOS present)
    f32    mos (0.0 when absent)
    per frame, T times:
        f32 x N*C_feat   raw feature map, row-major
        f32 x C_cont     content embedding
        f32 x C_dist     distortion embedding
    u32    CRC32 of all preceding bytes
"""

from __future__ import annotations

import struct
import zlib
from typing import Optional

import numpy as np

from .errors import ConfigError

PFVF_MAGIC = b"PFVF"
PFVF_VERSION = 1


def pfvf_bytes(
    features: np.ndarray,
    content: np.ndarray,
    distortion: np.ndarray,
    mos: Optional[float] = None,
) -> bytes:
    """Serialize one video's features; shapes (T, N, C_feat), (T, C_cont),
    (T, C_dist) with a shared T."""
    features = np.asarray(features)
    content = np.asarray(content)
    distortion = np.asarray(distortion)
    if features.ndim != 3:
        raise ConfigError(f"features must be (T, N, C_feat), got {features.shape}")
    t = features.shape[0]
    if content.ndim != 2 or content.shape[0] != t:
        raise ConfigError(f"content must be (T={t}, C_cont), got {content.shape}")
    if distortion.ndim != 2 or distortion.shape[0] != t:
        raise ConfigError(f"distortion must be (T={t}, C_dist), got {distortion.shape}")
    for name, arr in (("features", features), ("content", content),
                      ("distortion", distortion)):
        if not np.isfinite(arr).all():
            raise ConfigError(f"non-finite values in {name}")
    if mos is not None and not np.isfinite(mos):
        raise ConfigError(f"mos must be finite, got {mos!r}")

    chunks = [PFVF_MAGIC, struct.pack("<I", PFVF_VERSION)]
    _, n, c_feat = features.shape
    for v in (t, n, c_feat, content.shape[1], distortion.shape[1]):
        chunks.append(struct.pack("<I", v))
    chunks.append(struct.pack("<I", 1 if mos is not None else 0))
    chunks.append(struct.pack("<f", float(mos) if mos is not None else 0.0))
    for i in range(t):
        chunks.append(np.ascontiguousarray(features[i], dtype="<f4").tobytes())
        chunks.append(np.ascontiguousarray(content[i], dtype="<f4").tobytes())
        chunks.append(np.ascontiguousarray(distortion[i], dtype="<f4").tobytes())
    payload = b"".join(chunks)
    return payload + struct.pack("<I", zlib.crc32(payload))


def write_pfvf(
    path: str,
    features: np.ndarray,
    content: np.ndarray,
    distortion: np.ndarray,
    mos: Optional[float] = None,
) -> int:
    """Write one video's features to `path`; returns the byte count."""
    data = pfvf_bytes(features, content, distortion, mos)
    with open(path, "wb") as fh:
        fh.write(data)
    return len(data)
