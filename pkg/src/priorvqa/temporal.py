"""Temporal fusion and score pooling.

Frame quality embeddings run through a single-layer GRU; each hidden state
maps to a scalar frame score through an affine head.  The video score blends
two per-frame elements that mimic how viewers judge quality over time:

  memory element   m_t: worst score in the preceding window of tau frames
                   (viewers punish recent drops); m_1 = q_1.
  current element  c_t: softmin-weighted average over the upcoming window
                   {t, ..., min(T, t+tau-1)} with weights exp(-q)/sum exp(-q)
                   (poorer frames weigh more heavily).

  Q = mean over t of [gamma * m_t + (1 - gamma) * c_t].

The preceding window excludes frame t itself; the upcoming window includes
it.  Minimum ties resolve to the earliest frame so the subgradient path is
deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ConfigError, ContractError, DimensionError


@dataclass(frozen=True)
class PoolingConfig:
    tau: int = 12
    gamma: float = 0.5

    def validate(self) -> "PoolingConfig":
        if not isinstance(self.tau, int) or self.tau < 1:
            raise ConfigError(f"tau must be a positive integer, got {self.tau!r}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError(f"gamma must lie in [0, 1], got {self.gamma!r}")
        return self


@dataclass
class GruParams:
    w_z: Tensor
    u_z: Tensor
    b_z: Tensor
    w_r: Tensor
    u_r: Tensor
    b_r: Tensor
    w_h: Tensor
    u_h: Tensor
    b_h: Tensor
    w_fc: Tensor  # (Dh, 1), or (D, 1) when the GRU is ablated away
    b_fc: Tensor  # (1,)

    def named_tensors(self):
        for name in ("w_z", "u_z", "b_z", "w_r", "u_r", "b_r", "w_h", "u_h", "b_h",
                     "w_fc", "b_fc"):
            yield f"gru.{name}", getattr(self, name)


def init_gru_params(
    d_in: int, d_hidden: int, rng: np.random.Generator, use_gru: bool = True
) -> GruParams:
    """Same policy as the encoder: uniform(+-1/sqrt(fan_in)) weights, zero
    biases, fixed draw order z, r, h, then the scoring head.  With the GRU
    ablated the head reads the encoder output directly, so it is D wide."""

    def w(fan_in, shape):
        bound = 1.0 / np.sqrt(fan_in)
        return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True)

    def zeros(shape):
        return Tensor(np.zeros(shape), requires_grad=True)

    head_in = d_hidden if use_gru else d_in
    return GruParams(
        w_z=w(d_in, (d_in, d_hidden)),
        u_z=w(d_hidden, (d_hidden, d_hidden)),
        b_z=zeros(d_hidden),
        w_r=w(d_in, (d_in, d_hidden)),
        u_r=w(d_hidden, (d_hidden, d_hidden)),
        b_r=zeros(d_hidden),
        w_h=w(d_in, (d_in, d_hidden)),
        u_h=w(d_hidden, (d_hidden, d_hidden)),
        b_h=zeros(d_hidden),
        w_fc=w(head_in, (head_in, 1)),
        b_fc=zeros(1),
    )


def gru_step(f_t: Tensor, h_prev: Tensor, params: GruParams) -> Tensor:
    """One GRU cell update.

    z = sigmoid(f W_z + h U_z + b_z)        update gate
    r = sigmoid(f W_r + h U_r + b_r)        reset gate
    hcand = tanh(f W_h + (r*h) U_h + b_h)
    h_t = (1 - z) * h_prev + z * hcand
    """
    if f_t.shape[-1] != params.w_z.shape[0]:
        raise DimensionError(f"gru input {f_t.shape} does not match W_z {params.w_z.shape}")
    if h_prev.shape[-1] != params.u_z.shape[0]:
        raise DimensionError(f"gru state {h_prev.shape} does not match U_z {params.u_z.shape}")
    z = ad.sigmoid(ad.matmul(f_t, params.w_z) + ad.matmul(h_prev, params.u_z) + params.b_z)
    r = ad.sigmoid(ad.matmul(f_t, params.w_r) + ad.matmul(h_prev, params.u_r) + params.b_r)
    hcand = ad.tanh(ad.matmul(f_t, params.w_h) + ad.matmul(r * h_prev, params.u_h) + params.b_h)
    one = Tensor(np.ones(z.shape))
    return (one - z) * h_prev + z * hcand


def gru_sequence(frames: Tensor, params: GruParams) -> Tensor:
    """Run the cell over frames (T, D) from h_0 = zeros; returns states (T, Dh)."""
    t_count = frames.shape[0]
    dh = params.u_z.shape[0]
    h = Tensor(np.zeros(dh))
    states = []
    for t in range(t_count):
        h = gru_step(frames[t], h, params)
        states.append(ad.reshape(h, (1, dh)))
    return ad.concat(states, axis=0)


def frame_score(h_t: Tensor, params: GruParams) -> Tensor:
    """Affine map of one hidden state to a scalar score."""
    return ad.reshape(ad.matmul(h_t, params.w_fc) + params.b_fc, ())


def frame_scores(states: Tensor, params: GruParams) -> Tensor:
    """Scores for a whole sequence of states (T, Dh) -> (T,)."""
    return ad.reshape(ad.matmul(states, params.w_fc) + params.b_fc, (states.shape[0],))


def _check_index(q_len: int, t: int):
    if q_len < 1:
        raise ContractError("empty score sequence")
    if not 1 <= t <= q_len:
        raise ContractError(f"frame index {t} outside 1..{q_len}")


def memory_element(q: Tensor, t: int, tau: int) -> Tensor:
    """Worst score over the preceding window; frame indices are 1-based.

    m_1 = q_1; for t > 1, m_t = min over {max(1, t-tau), ..., t-1}.
    """
    _check_index(q.shape[0], t)
    if t == 1:
        return q[0]
    lo = max(1, t - tau)
    return ad.reduce_min(q[lo - 1 : t - 1])


def current_element(q: Tensor, t: int, tau: int) -> Tensor:
    """Softmin-weighted average over the upcoming window {t, ..., min(T, t+tau-1)}."""
    _check_index(q.shape[0], t)
    hi = min(q.shape[0], t + tau - 1)
    window = q[t - 1 : hi]
    weights = ad.softmax(ad.neg(window), axis=0)
    return ad.reduce_sum(weights * window)


@dataclass
class QualityTrace:
    q: np.ndarray
    m: np.ndarray
    c: np.ndarray
    Q: float


def video_score(q: Tensor, pooling: PoolingConfig) -> Tensor:
    """Pooled video score: mean over frames of gamma*m_t + (1-gamma)*c_t."""
    pooling.validate()
    t_count = q.shape[0]
    if t_count < 1:
        raise ContractError("empty score sequence")
    terms = []
    for t in range(1, t_count + 1):
        m_t = memory_element(q, t, pooling.tau)
        c_t = current_element(q, t, pooling.tau)
        terms.append(pooling.gamma * m_t + (1.0 - pooling.gamma) * c_t)
    return ad.mean(ad.stack_scalars(terms))


def trace_from_scores(q: Tensor, pooling: PoolingConfig, pooled: bool = True) -> QualityTrace:
    """Assemble the per-frame trace; Q is mean(q) when pooling is disabled."""
    with ad.no_grad():
        t_count = q.shape[0]
        m = np.array([memory_element(q, t, pooling.tau).item() for t in range(1, t_count + 1)])
        c = np.array([current_element(q, t, pooling.tau).item() for t in range(1, t_count + 1)])
        big_q = video_score(q, pooling).item() if pooled else float(q.data.mean())
    return QualityTrace(q=q.data.copy(), m=m, c=c, Q=big_q)
