"""Full model: configuration, initialization, prediction, serialization.

Frames are encoded independently; all cross-frame interaction happens in the
GRU and the pooling stage.  Parameter files (magic "PFMP") embed the config
as JSON so a file is self-describing, followed by a named tensor table in
raw little-endian f64, and a trailing CRC32.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from . import autodiff as ad
from . import encoder as enc
from . import temporal as tmp
from .autodiff import Tensor
from .binio import ByteReader, ByteWriter, checked_payload
from .dataio import FeatureSequence
from .encoder import AblationConfig, EncoderConfig, EncoderParams
from .errors import ConfigError, FormatError, VersionError
from .temporal import GruParams, PoolingConfig, QualityTrace

PFMP_MAGIC = b"PFMP"
PFMP_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    encoder: EncoderConfig = EncoderConfig()
    gru_hidden: int = 32
    pooling: PoolingConfig = PoolingConfig()
    ablation: AblationConfig = AblationConfig()
    seed: int = 0

    def validate(self) -> "ModelConfig":
        self.encoder.validate()
        self.pooling.validate()
        if not isinstance(self.gru_hidden, int) or self.gru_hidden < 1:
            raise ConfigError(f"gru_hidden must be a positive integer, got {self.gru_hidden!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed must be a nonnegative integer, got {self.seed!r}")
        return self

    def to_dict(self) -> dict:
        return {
            "L": self.encoder.L,
            "H": self.encoder.H,
            "D": self.encoder.D,
            "D_ff": self.encoder.D_ff,
            "N": self.encoder.N,
            "C_feat": self.encoder.C_feat,
            "C_cont": self.encoder.C_cont,
            "C_dist": self.encoder.C_dist,
            "gru_hidden": self.gru_hidden,
            "tau": self.pooling.tau,
            "gamma": self.pooling.gamma,
            "use_content_token": self.ablation.use_content_token,
            "use_distortion_token": self.ablation.use_distortion_token,
            "use_temporal_pooling": self.ablation.use_temporal_pooling,
            "use_gru": self.ablation.use_gru,
            "seed": self.seed,
        }

    @staticmethod
    def from_dict(d: dict) -> "ModelConfig":
        known = set(ModelConfig().to_dict())
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown model config keys: {sorted(unknown)}")
        base = ModelConfig().to_dict()
        base.update(d)
        cfg = ModelConfig(
            encoder=EncoderConfig(
                L=base["L"], H=base["H"], D=base["D"], D_ff=base["D_ff"], N=base["N"],
                C_feat=base["C_feat"], C_cont=base["C_cont"], C_dist=base["C_dist"],
            ),
            gru_hidden=base["gru_hidden"],
            pooling=PoolingConfig(tau=base["tau"], gamma=base["gamma"]),
            ablation=AblationConfig(
                use_content_token=base["use_content_token"],
                use_distortion_token=base["use_distortion_token"],
                use_temporal_pooling=base["use_temporal_pooling"],
                use_gru=base["use_gru"],
            ),
            seed=base["seed"],
        )
        return cfg.validate()

    def with_ablation(self, ablation: AblationConfig) -> "ModelConfig":
        return replace(self, ablation=ablation)


@dataclass
class ModelParams:
    config: ModelConfig
    encoder: EncoderParams
    gru: GruParams

    def named_tensors(self):
        yield from self.encoder.named_tensors()
        yield from self.gru.named_tensors()

    def trainable(self) -> list[tuple[str, Tensor]]:
        return list(self.named_tensors())

    def total_parameter_count(self) -> int:
        return sum(t.size for _, t in self.named_tensors())

    def clone_data(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self.named_tensors()}

    def restore_data(self, snapshot: dict[str, np.ndarray]) -> None:
        for name, t in self.named_tensors():
            t.data = snapshot[name].copy()


def init_model(config: ModelConfig) -> ModelParams:
    """Seeded construction: encoder draws first, then the GRU, so one seed
    pins every parameter value."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    enc_params = enc.init_encoder_params(config.encoder, rng)
    gru_params = tmp.init_gru_params(
        config.encoder.D, config.gru_hidden, rng, use_gru=config.ablation.use_gru
    )
    return ModelParams(config=config, encoder=enc_params, gru=gru_params)


def score_video(
    raw: Tensor, content: Tensor, distortion: Tensor, params: ModelParams
) -> tuple[Tensor, Tensor]:
    """Differentiable forward pass: per-frame scores q (T,) and video score Q.

    With the GRU ablated the scoring head reads the encoder embeddings
    directly; with pooling ablated Q is the plain mean of q.
    """
    config = params.config
    abl = config.ablation
    emb = enc.encode_frames(raw, content, distortion, params.encoder, config.encoder, abl)
    if abl.use_gru:
        states = tmp.gru_sequence(emb, params.gru)
    else:
        states = emb
    q = tmp.frame_scores(states, params.gru)
    if abl.use_temporal_pooling:
        big_q = tmp.video_score(q, config.pooling)
    else:
        big_q = ad.mean(q)
    return q, big_q


def predict_video(video: FeatureSequence, params: ModelParams, config: ModelConfig = None) -> QualityTrace:
    """Score one video; returns the full per-frame trace.  `config` defaults
    to the one carried inside `params`."""
    if config is not None and config is not params.config:
        params = ModelParams(config=config, encoder=params.encoder, gru=params.gru)
    with ad.no_grad():
        q, big_q = score_video(
            Tensor(video.features), Tensor(video.content), Tensor(video.distortion), params
        )
        trace = tmp.trace_from_scores(
            q, params.config.pooling, pooled=params.config.ablation.use_temporal_pooling
        )
    return trace


# ---------------------------------------------------------------------------
# parameter files
# ---------------------------------------------------------------------------


def save_params(params: ModelParams, path: str) -> None:
    w = ByteWriter()
    w.raw(PFMP_MAGIC)
    w.u32(PFMP_VERSION)
    w.utf8(json.dumps(params.config.to_dict(), sort_keys=True, separators=(",", ":")))
    named = list(params.named_tensors())
    w.u32(len(named))
    for name, t in named:
        w.utf8(name)
        w.u32(t.ndim)
        for e in t.shape:
            w.u32(e)
        w.f64_array(t.data)
    with open(path, "wb") as fh:
        fh.write(w.finish_with_crc())


def load_params(path: str) -> ModelParams:
    with open(path, "rb") as fh:
        data = fh.read()
    r = ByteReader(checked_payload(data, path), path)
    r.magic(PFMP_MAGIC)
    version = r.u32()
    if version != PFMP_VERSION:
        raise VersionError(f"{path}: file version {version}, reader supports {PFMP_VERSION}")
    try:
        config = ModelConfig.from_dict(json.loads(r.utf8(r.u32())))
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise FormatError(f"{path}: unreadable config block: {e}") from e
    count = r.u32()
    loaded: dict[str, np.ndarray] = {}
    for _ in range(count):
        name = r.utf8(r.u32())
        rank = r.u32()
        extents = tuple(r.u32() for _ in range(rank))
        n_elem = r.check_extents(extents, f"tensor {name!r}")
        loaded[name] = r.f64_array(n_elem, extents)
    r.expect_end()
    params = init_model(config)
    expected = dict(params.named_tensors())
    missing = set(expected) - set(loaded)
    extra = set(loaded) - set(expected)
    if missing or extra:
        raise FormatError(
            f"{path}: tensor table mismatch (missing {sorted(missing)}, extra {sorted(extra)})"
        )
    for name, t in expected.items():
        if loaded[name].shape != t.shape:
            raise FormatError(
                f"{path}: tensor {name!r} has shape {loaded[name].shape}, config implies {t.shape}"
            )
        t.data = loaded[name]
    return params
