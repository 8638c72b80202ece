"""Feature interchange files and the synthetic benchmark generator.

A feature file (magic "PFVF") carries one video: per frame, an N x C_feat
raw feature map plus a content embedding (C_cont) and a distortion embedding
(C_dist), with an optional MOS label.  Values are f32 on disk and widened to
f64 in memory; the file ends with a CRC32 over everything before it.

Byte layout, little-endian:

    magic  "PFVF"
    u32    version (currently 1)
    u32 x5 T, N, C_feat, C_cont, C_dist
    u32    flags (bit 0: MOS present)
    f32    mos (0.0 when absent)
    per frame, T times:
        f32 x (N*C_feat)   raw features, row-major
        f32 x C_cont       content embedding
        f32 x C_dist       distortion embedding
    u32    CRC32 of all preceding bytes

The synthetic generator fabricates videos whose quality is analytic by
construction: a latent score s ~ uniform[1, 5] is injected as an affine
signal into both the distortion embeddings and the frame features, so a
model can only recover MOS by reading those inputs, and prior-token
ablations lose measurable signal.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .binio import ByteReader, ByteWriter, checked_payload
from .errors import ConfigError, ContractError, NonFiniteError, VersionError

PFVF_MAGIC = b"PFVF"
PFVF_VERSION = 1


@dataclass
class FeatureSequence:
    video_id: str
    features: np.ndarray  # (T, N, C_feat) float64
    content: np.ndarray  # (T, C_cont) float64
    distortion: np.ndarray  # (T, C_dist) float64
    mos: Optional[float] = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.content = np.asarray(self.content, dtype=np.float64)
        self.distortion = np.asarray(self.distortion, dtype=np.float64)
        if self.features.ndim != 3:
            raise ContractError(f"features must be (T, N, C_feat), got {self.features.shape}")
        t = self.features.shape[0]
        if self.content.ndim != 2 or self.content.shape[0] != t:
            raise ContractError(
                f"content must be (T={t}, C_cont), got {self.content.shape}"
            )
        if self.distortion.ndim != 2 or self.distortion.shape[0] != t:
            raise ContractError(
                f"distortion must be (T={t}, C_dist), got {self.distortion.shape}"
            )
        for name, arr in (("features", self.features), ("content", self.content),
                          ("distortion", self.distortion)):
            if not np.isfinite(arr).all():
                raise NonFiniteError(f"non-finite values in {name} of video {self.video_id!r}")
        if self.mos is not None:
            self.mos = float(self.mos)
            if not np.isfinite(self.mos):
                raise NonFiniteError(f"non-finite MOS for video {self.video_id!r}")

    @property
    def T(self) -> int:
        return self.features.shape[0]

    @property
    def shape_tuple(self) -> tuple:
        """(T, N, C_feat, C_cont, C_dist) as stored in the file header."""
        return (
            self.features.shape[0],
            self.features.shape[1],
            self.features.shape[2],
            self.content.shape[1],
            self.distortion.shape[1],
        )


def write_feature_file(seq: FeatureSequence, path: str) -> None:
    t, n, c_feat, c_cont, c_dist = seq.shape_tuple
    w = ByteWriter()
    w.raw(PFVF_MAGIC)
    w.u32(PFVF_VERSION)
    for v in (t, n, c_feat, c_cont, c_dist):
        w.u32(v)
    w.u32(1 if seq.mos is not None else 0)
    w.f32(seq.mos if seq.mos is not None else 0.0)
    for i in range(t):
        w.f32_array(seq.features[i])
        w.f32_array(seq.content[i])
        w.f32_array(seq.distortion[i])
    with open(path, "wb") as fh:
        fh.write(w.finish_with_crc())


def read_feature_file(path: str) -> FeatureSequence:
    with open(path, "rb") as fh:
        data = fh.read()
    r = ByteReader(checked_payload(data, path), path)
    r.magic(PFVF_MAGIC)
    version = r.u32()
    if version != PFVF_VERSION:
        raise VersionError(f"{path}: file version {version}, reader supports {PFVF_VERSION}")
    t, n, c_feat, c_cont, c_dist = (r.u32() for _ in range(5))
    r.check_extents((t, n, c_feat), "frame features")
    r.check_extents((t, c_cont), "content embeddings")
    r.check_extents((t, c_dist), "distortion embeddings")
    flags = r.u32()
    mos_value = r.f32()
    features = np.empty((t, n, c_feat))
    content = np.empty((t, c_cont))
    distortion = np.empty((t, c_dist))
    for i in range(t):
        features[i] = r.f32_array(n * c_feat, (n, c_feat))
        content[i] = r.f32_array(c_cont, (c_cont,))
        distortion[i] = r.f32_array(c_dist, (c_dist,))
    r.expect_end()
    video_id = os.path.splitext(os.path.basename(path))[0]
    return FeatureSequence(
        video_id=video_id,
        features=features,
        content=content,
        distortion=distortion,
        mos=mos_value if flags & 1 else None,
    )


# ---------------------------------------------------------------------------
# synthetic benchmark
# ---------------------------------------------------------------------------

MOS_LOW, MOS_HIGH = 1.0, 5.0


@dataclass(frozen=True)
class SynthSpec:
    count: int = 250
    T: int = 8
    N: int = 4
    C_feat: int = 16
    C_cont: int = 8
    C_dist: int = 8
    sigma: float = 0.1
    seed: int = 0
    content_clusters: int = 5

    def validate(self) -> "SynthSpec":
        for name in ("count", "T", "N", "C_feat", "C_cont", "C_dist", "content_clusters"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if self.sigma < 0:
            raise ConfigError(f"sigma must be nonnegative, got {self.sigma!r}")
        return self


def synth_dataset(spec: SynthSpec) -> list[FeatureSequence]:
    """Fabricate `count` labeled videos.

    Latent quality s ~ uniform[MOS_LOW, MOS_HIGH] per video.  Content
    embeddings sit at one of `content_clusters` fixed random centers plus
    noise (content varies independently of quality).  Distortion embeddings
    are d0 + s*d1 + noise, frame features are b0 + s*b1 + per-frame noise,
    with d1 and b1 unit-norm directions fixed by the seed.  MOS = s exactly.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    centers = rng.normal(0.0, 1.0, size=(spec.content_clusters, spec.C_cont))
    d0 = rng.normal(0.0, 1.0, size=spec.C_dist)
    d1 = rng.normal(0.0, 1.0, size=spec.C_dist)
    d1 /= np.linalg.norm(d1)
    b0 = rng.normal(0.0, 1.0, size=(spec.N, spec.C_feat))
    b1 = rng.normal(0.0, 1.0, size=(spec.N, spec.C_feat))
    b1 /= np.linalg.norm(b1)
    videos = []
    for i in range(spec.count):
        s = rng.uniform(MOS_LOW, MOS_HIGH)
        cluster = int(rng.integers(spec.content_clusters))
        content = centers[cluster] + spec.sigma * rng.normal(size=(spec.T, spec.C_cont))
        distortion = d0 + s * d1 + spec.sigma * rng.normal(size=(spec.T, spec.C_dist))
        features = b0 + s * b1 + spec.sigma * rng.normal(size=(spec.T, spec.N, spec.C_feat))
        videos.append(
            FeatureSequence(
                video_id=f"synth-{spec.seed:04d}-{i:05d}",
                features=features,
                content=content,
                distortion=distortion,
                mos=s,
            )
        )
    return videos


def recover_mos_least_squares(videos: list[FeatureSequence], spec: SynthSpec) -> np.ndarray:
    """Solve for each video's latent s from its distortion embeddings alone,
    using the generator's own construction.  A sanity oracle for tests: at
    sigma=0 the recovery is exact."""
    rng = np.random.default_rng(spec.seed)
    rng.normal(0.0, 1.0, size=(spec.content_clusters, spec.C_cont))
    d0 = rng.normal(0.0, 1.0, size=spec.C_dist)
    d1 = rng.normal(0.0, 1.0, size=spec.C_dist)
    d1 /= np.linalg.norm(d1)
    out = []
    for v in videos:
        centered = v.distortion - d0  # (T, C_dist), each row ~ s*d1
        out.append(float(np.mean(centered @ d1) / (d1 @ d1)))
    return np.array(out)
