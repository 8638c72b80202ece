"""Per-frame spatial encoder.

A frame arrives as N raw feature vectors plus a content embedding and a
distortion embedding.  All three are projected to width D, assembled into a
token sequence [quality token; N feature tokens; content token; distortion
token] with learned position embeddings, and pushed through L post-norm
transformer layers (residual first, layer norm after, for both the attention
and feed-forward sublayers).  Only the quality token's final embedding is
returned; the other positions exist to shape attention.

Every function accepts a single frame (rank-2 token matrix) or a batch of
frames stacked on a leading axis; the math is identical because all ops act
on the last one or two axes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ConfigError, DimensionError


@dataclass(frozen=True)
class EncoderConfig:
    L: int = 6
    H: int = 8
    D: int = 512
    D_ff: int = 1024
    N: int = 49
    C_feat: int = 2048
    C_cont: int = 512
    C_dist: int = 512

    def validate(self) -> "EncoderConfig":
        for name in ("L", "H", "D", "D_ff", "N", "C_feat", "C_cont", "C_dist"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if self.D % self.H != 0:
            raise ConfigError(f"D={self.D} not divisible by H={self.H}")
        return self


@dataclass(frozen=True)
class AblationConfig:
    """Architecture variant switches.

    The two token flags are consumed here; the temporal flags are consumed
    by the scoring stack but live alongside so one object describes a variant.
    """

    use_content_token: bool = True
    use_distortion_token: bool = True
    use_temporal_pooling: bool = True
    use_gru: bool = True

    def tag(self) -> str:
        dropped = []
        if not self.use_content_token:
            dropped.append("CT")
        if not self.use_distortion_token:
            dropped.append("DT")
        if not self.use_gru:
            dropped.append("GRU")
        if not self.use_temporal_pooling:
            dropped.append("TP")
        return "full" if not dropped else "w.o. " + "+".join(dropped)


FULL_MODEL = AblationConfig()


@dataclass
class LayerParams:
    w_q: Tensor
    b_q: Tensor
    # no key bias: it would add a per-query constant to every attention
    # logit, which the softmax normalization cancels exactly
    w_k: Tensor
    w_v: Tensor
    b_v: Tensor
    w_o: Tensor
    b_o: Tensor
    ln1_gain: Tensor
    ln1_bias: Tensor
    w_ff1: Tensor
    b_ff1: Tensor
    w_ff2: Tensor
    b_ff2: Tensor
    ln2_gain: Tensor
    ln2_bias: Tensor


@dataclass
class EncoderParams:
    w_feat: Tensor
    b_feat: Tensor
    w_cont: Tensor
    b_cont: Tensor
    w_dist: Tensor
    b_dist: Tensor
    quality_token: Tensor  # (D,)
    pos_embed: Tensor  # (N+3, D), rows: [quality; features 1..N; content; distortion]
    layers: list[LayerParams] = field(default_factory=list)

    def named_tensors(self):
        for name in ("w_feat", "b_feat", "w_cont", "b_cont", "w_dist", "b_dist",
                     "quality_token", "pos_embed"):
            yield f"enc.{name}", getattr(self, name)
        for i, lp in enumerate(self.layers):
            for name in ("w_q", "b_q", "w_k", "w_v", "b_v", "w_o", "b_o",
                         "ln1_gain", "ln1_bias", "w_ff1", "b_ff1", "w_ff2", "b_ff2",
                         "ln2_gain", "ln2_bias"):
                yield f"enc.layer{i}.{name}", getattr(lp, name)


def _uniform_weight(rng: np.random.Generator, fan_in: int, shape) -> Tensor:
    bound = 1.0 / np.sqrt(fan_in)
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True)


def _zeros(shape) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True)


def _ones(shape) -> Tensor:
    return Tensor(np.ones(shape), requires_grad=True)


def init_encoder_params(config: EncoderConfig, rng: np.random.Generator) -> EncoderParams:
    """Seeded initialization with a fixed draw order (weights first, then the
    quality token and position table, then layers in index order), so a seed
    pins every value."""
    c = config.validate()
    p = EncoderParams(
        w_feat=_uniform_weight(rng, c.C_feat, (c.C_feat, c.D)),
        b_feat=_zeros(c.D),
        w_cont=_uniform_weight(rng, c.C_cont, (c.C_cont, c.D)),
        b_cont=_zeros(c.D),
        w_dist=_uniform_weight(rng, c.C_dist, (c.C_dist, c.D)),
        b_dist=_zeros(c.D),
        quality_token=Tensor(rng.normal(0.0, 0.02, size=c.D), requires_grad=True),
        pos_embed=Tensor(rng.normal(0.0, 0.02, size=(c.N + 3, c.D)), requires_grad=True),
    )
    for _ in range(c.L):
        p.layers.append(
            LayerParams(
                w_q=_uniform_weight(rng, c.D, (c.D, c.D)),
                b_q=_zeros(c.D),
                w_k=_uniform_weight(rng, c.D, (c.D, c.D)),
                w_v=_uniform_weight(rng, c.D, (c.D, c.D)),
                b_v=_zeros(c.D),
                w_o=_uniform_weight(rng, c.D, (c.D, c.D)),
                b_o=_zeros(c.D),
                ln1_gain=_ones(c.D),
                ln1_bias=_zeros(c.D),
                w_ff1=_uniform_weight(rng, c.D, (c.D, c.D_ff)),
                b_ff1=_zeros(c.D_ff),
                w_ff2=_uniform_weight(rng, c.D_ff, (c.D_ff, c.D)),
                b_ff2=_zeros(c.D),
                ln2_gain=_ones(c.D),
                ln2_bias=_zeros(c.D),
            )
        )
    return p


def token_count(config: EncoderConfig, ablation: AblationConfig) -> int:
    return config.N + 1 + int(ablation.use_content_token) + int(ablation.use_distortion_token)


def project_features(raw: Tensor, params: EncoderParams) -> Tensor:
    """Affine map of raw frame features (…, N, C_feat) to tokens (…, N, D)."""
    return ad.matmul(raw, params.w_feat) + params.b_feat


def project_priors(content: Tensor, distortion: Tensor, params: EncoderParams):
    """Affine maps of the two prior embeddings (…, C) to width-D tokens."""
    pf_c = ad.matmul(content, params.w_cont) + params.b_cont
    pf_d = ad.matmul(distortion, params.w_dist) + params.b_dist
    return pf_c, pf_d


def assemble_tokens(
    F: Tensor,
    pf_c: Tensor,
    pf_d: Tensor,
    params: EncoderParams,
    ablation: AblationConfig = FULL_MODEL,
) -> Tensor:
    """Stack [quality token; feature tokens; priors] and add position embeddings.

    F is (N, D) for one frame or (T, N, D) for a batch; priors follow with
    (D,) or (T, D).  An ablated prior contributes neither its token row nor
    its position row.  Output rows: N+3, N+2, or N+1.
    """
    n = F.shape[-2]
    d = F.shape[-1]
    pe = params.pos_embed
    if pe.shape[0] != n + 3:
        raise DimensionError(
            f"position table has {pe.shape[0]} rows, tokens need {n} features (+3)"
        )
    batched = F.ndim == 3
    qt = ad.reshape(params.quality_token, (1, d))
    if batched:
        t = F.shape[0]
        qt = ad.broadcast_to(ad.reshape(qt, (1, 1, d)), (t, 1, d))
        pf_c = ad.reshape(pf_c, (t, 1, d))
        pf_d = ad.reshape(pf_d, (t, 1, d))
    else:
        pf_c = ad.reshape(pf_c, (1, d))
        pf_d = ad.reshape(pf_d, (1, d))
    rows = [qt, F]
    pe_slices = [pe[0:1], pe[1 : n + 1]]
    if ablation.use_content_token:
        rows.append(pf_c)
        pe_slices.append(pe[n + 1 : n + 2])
    if ablation.use_distortion_token:
        rows.append(pf_d)
        pe_slices.append(pe[n + 2 : n + 3])
    tokens = ad.concat(rows, axis=-2)
    return tokens + ad.concat(pe_slices, axis=0)


def mha(Z: Tensor, layer: LayerParams, n_heads: int) -> Tensor:
    """Scaled dot-product multi-head self-attention over all rows, unmasked."""
    d = Z.shape[-1]
    if d % n_heads != 0:
        raise ConfigError(f"width {d} not divisible by {n_heads} heads")
    dh = d // n_heads
    q = ad.matmul(Z, layer.w_q) + layer.b_q
    k = ad.matmul(Z, layer.w_k)
    v = ad.matmul(Z, layer.w_v) + layer.b_v
    scale = 1.0 / np.sqrt(dh)
    heads = []
    for h in range(n_heads):
        sl = (Ellipsis, slice(h * dh, (h + 1) * dh))
        qh, kh, vh = q[sl], k[sl], v[sl]
        att = ad.softmax(ad.matmul(qh, ad.transpose(kh)) * scale, axis=-1)
        heads.append(ad.matmul(att, vh))
    return ad.matmul(ad.concat(heads, axis=-1), layer.w_o) + layer.b_o


def attention_weights(Z: Tensor, layer: LayerParams, n_heads: int) -> list[np.ndarray]:
    """Per-head attention weight matrices, for inspection and tests."""
    d = Z.shape[-1]
    dh = d // n_heads
    with ad.no_grad():
        q = (ad.matmul(Z, layer.w_q) + layer.b_q).data
        k = ad.matmul(Z, layer.w_k).data
    scale = 1.0 / np.sqrt(dh)
    out = []
    for h in range(n_heads):
        qh = q[..., h * dh : (h + 1) * dh]
        kh = k[..., h * dh : (h + 1) * dh]
        s = qh @ np.swapaxes(kh, -1, -2) * scale
        e = np.exp(s - s.max(axis=-1, keepdims=True))
        out.append(e / e.sum(axis=-1, keepdims=True))
    return out


def feed_forward(Z: Tensor, layer: LayerParams) -> Tensor:
    hidden = ad.gelu(ad.matmul(Z, layer.w_ff1) + layer.b_ff1)
    return ad.matmul(hidden, layer.w_ff2) + layer.b_ff2


def encoder_layer(Z_prev: Tensor, layer: LayerParams, n_heads: int) -> Tensor:
    # post-norm: residual add first, then normalize, for both sublayers
    z_mid = ad.layer_norm(mha(Z_prev, layer, n_heads) + Z_prev, layer.ln1_gain, layer.ln1_bias)
    return ad.layer_norm(feed_forward(z_mid, layer) + z_mid, layer.ln2_gain, layer.ln2_bias)


def _check_widths(raw: Tensor, content: Tensor, distortion: Tensor, config: EncoderConfig):
    if raw.shape[-2] != config.N or raw.shape[-1] != config.C_feat:
        raise DimensionError(
            f"raw features {raw.shape} do not match N={config.N}, C_feat={config.C_feat}"
        )
    if content.shape[-1] != config.C_cont:
        raise DimensionError(
            f"content embedding {content.shape} does not match C_cont={config.C_cont}"
        )
    if distortion.shape[-1] != config.C_dist:
        raise DimensionError(
            f"distortion embedding {distortion.shape} does not match C_dist={config.C_dist}"
        )


def encode_frames(
    raw: Tensor,
    content: Tensor,
    distortion: Tensor,
    params: EncoderParams,
    config: EncoderConfig,
    ablation: AblationConfig = FULL_MODEL,
) -> Tensor:
    """Encode a batch of frames (T, N, C_feat) to quality embeddings (T, D)."""
    _check_widths(raw, content, distortion, config)
    F = project_features(raw, params)
    pf_c, pf_d = project_priors(content, distortion, params)
    Z = assemble_tokens(F, pf_c, pf_d, params, ablation)
    for layer in params.layers:
        Z = encoder_layer(Z, layer, config.H)
    return Z[..., 0, :]


def encode_frame(
    raw: Tensor,
    content: Tensor,
    distortion: Tensor,
    params: EncoderParams,
    config: EncoderConfig,
    ablation: AblationConfig = FULL_MODEL,
) -> Tensor:
    """Encode one frame (N, C_feat) to its quality embedding (D,)."""
    if raw.ndim != 2:
        raise DimensionError(f"encode_frame expects one frame (N, C_feat), got {raw.shape}")
    return encode_frames(raw, content, distortion, params, config, ablation)
