"""Finite-difference verification of the full model gradient.

For each seed: build a tiny model, fabricate one labeled video, take the L1
loss of its pooled score, and compare the analytic gradient of every
trainable tensor against central differences.  The relative error uses
max(|analytic|, |numeric|, 1e-8) as the denominator, elementwise.

The label sits a small signed offset away from the model's own output.  The
gradient of |Q - target| is the same +-grad(Q) for any target, but central
differences subtract two nearly equal losses, so their rounding noise is
proportional to the loss magnitude; a small loss keeps that noise far below
the comparison floor while the offset stays orders of magnitude beyond any
single-coordinate perturbation of Q (the kink of |.| is never crossed).

This is the oracle behind the CLI `gradcheck` subcommand, the service
endpoint, and the acceptance suite; all three call `run_gradcheck`.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .encoder import EncoderConfig
from .model import ModelConfig, init_model, score_video
from .temporal import PoolingConfig

DEFAULT_TOLERANCE = 1e-4
# step for whole-model checks, chosen where rounding noise (shrinks with h)
# and truncation error (grows as h^2) balance; measured optimum on the tiny
# config, distinct from the 1e-5 op-level default in autodiff
FD_STEP = 2e-5

# small enough that 2 forward passes per coordinate stay fast, big enough
# that every code path (multi-head split, both priors, pooling windows) runs
TINY_CONFIG = ModelConfig(
    encoder=EncoderConfig(L=2, H=2, D=8, D_ff=16, N=4, C_feat=6, C_cont=5, C_dist=5),
    gru_hidden=4,
    pooling=PoolingConfig(tau=2, gamma=0.5),
)
TINY_T = 3


@dataclass
class GradcheckResult:
    max_rel_err: float
    worst_tensor: str
    seeds: int
    parameters_checked: int
    elapsed_seconds: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_err < self.tolerance


def _random_video(config: ModelConfig, t_frames: int, rng: np.random.Generator):
    e = config.encoder
    raw = rng.standard_normal((t_frames, e.N, e.C_feat))
    content = rng.standard_normal((t_frames, e.C_cont))
    distortion = rng.standard_normal((t_frames, e.C_dist))
    return raw, content, distortion


def run_gradcheck(
    config: ModelConfig = TINY_CONFIG,
    seeds: int = 20,
    t_frames: int = TINY_T,
    tolerance: float = DEFAULT_TOLERANCE,
    h: float = FD_STEP,
) -> GradcheckResult:
    started = time.monotonic()
    worst = 0.0
    worst_name = ""
    n_params = 0
    for seed in range(seeds):
        model_cfg = ModelConfig(
            encoder=config.encoder,
            gru_hidden=config.gru_hidden,
            pooling=config.pooling,
            ablation=config.ablation,
            seed=seed,
        )
        params = init_model(model_cfg)
        rng = np.random.default_rng(10_000 + seed)
        raw, content, distortion = _random_video(model_cfg, t_frames, rng)
        with ad.no_grad():
            _, base_q = score_video(
                Tensor(raw), Tensor(content), Tensor(distortion), params
            )
        # see the module docstring for why the target hugs the output
        offset = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.01, 0.03))
        target = base_q.item() + offset

        def forward_loss() -> float:
            _, big_q = score_video(
                Tensor(raw), Tensor(content), Tensor(distortion), params
            )
            return abs(big_q.item() - target)

        loss_inputs = (Tensor(raw), Tensor(content), Tensor(distortion))
        _, big_q = score_video(*loss_inputs, params)
        loss = ad.absolute(big_q - target)
        grads = ad.backward(loss)

        n_params = sum(t.size for _, t in params.named_tensors())
        for name, tensor in params.named_tensors():
            base = tensor.data

            def f(v):
                tensor.data = v
                return forward_loss()

            fd = ad.finite_diff_gradient(f, base, h=h)
            tensor.data = base
            analytic = grads[tensor]
            denom = np.maximum(np.maximum(np.abs(analytic), np.abs(fd)), 1e-8)
            err = float(np.max(np.abs(analytic - fd) / denom))
            if err > worst:
                worst = err
                worst_name = f"seed{seed}:{name}"
    return GradcheckResult(
        max_rel_err=worst,
        worst_tensor=worst_name,
        seeds=seeds,
        parameters_checked=n_params,
        elapsed_seconds=time.monotonic() - started,
        tolerance=tolerance,
    )
