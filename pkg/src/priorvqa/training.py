"""Loss, optimizers, dataset splitting, the training loop, and evaluation.

Training minimizes mean absolute error between pooled video scores and MOS
with Adam (the default) or plain SGD.  Batches are whole videos; gradients
are averaged across the batch by construction of the batch loss.  Everything
is deterministic given the config seeds.

A non-finite loss or parameter aborts the run: parameters roll back to the
start of the offending epoch and a TrainingDivergedError carries that last
finite state plus the history collected so far.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .dataio import FeatureSequence
from .encoder import AblationConfig
from .errors import ConfigError, ContractError, NonFiniteError, TrainingDivergedError
from .metrics import plcc, srcc
from .model import ModelConfig, ModelParams, init_model, predict_video, score_video


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    lr: float = 1e-4
    batch_size: int = 8
    optimizer: str = "adam"
    split_ratio: float = 0.8
    train_seed: int = 0

    def validate(self) -> "TrainConfig":
        if not isinstance(self.epochs, int) or self.epochs < 1:
            raise ConfigError(f"epochs must be a positive integer, got {self.epochs!r}")
        if self.lr < 0:
            raise ConfigError(f"lr must be nonnegative, got {self.lr!r}")
        if not isinstance(self.batch_size, int) or self.batch_size < 1:
            raise ConfigError(f"batch_size must be a positive integer, got {self.batch_size!r}")
        if self.optimizer not in ("adam", "sgd"):
            raise ConfigError(f"optimizer must be 'adam' or 'sgd', got {self.optimizer!r}")
        if not 0.0 < self.split_ratio < 1.0:
            raise ConfigError(f"split_ratio must lie in (0, 1), got {self.split_ratio!r}")
        if not isinstance(self.train_seed, int) or self.train_seed < 0:
            raise ConfigError(f"train_seed must be a nonnegative integer, got {self.train_seed!r}")
        return self

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "lr": self.lr,
            "batch_size": self.batch_size,
            "optimizer": self.optimizer,
            "split_ratio": self.split_ratio,
            "train_seed": self.train_seed,
        }

    @staticmethod
    def from_dict(d: dict) -> "TrainConfig":
        known = set(TrainConfig().to_dict())
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown train config keys: {sorted(unknown)}")
        base = TrainConfig().to_dict()
        base.update(d)
        return TrainConfig(**base).validate()


@dataclass
class EvalReport:
    plcc: float
    srcc: float
    pairs: list[tuple[str, float, float]]  # (video id, prediction, mos)
    tag: str


def l1_loss(pred: Tensor, target) -> Tensor:
    """Mean absolute error; the subgradient at exact zeros is 0."""
    t = target if isinstance(target, Tensor) else Tensor(np.asarray(target, dtype=np.float64))
    if pred.shape != t.shape:
        raise ContractError(f"loss shapes differ: {pred.shape} vs {t.shape}")
    return ad.mean(ad.absolute(pred - t))


class Sgd:
    def __init__(self, named_params: list[tuple[str, Tensor]], lr: float):
        self.named_params = named_params
        self.lr = lr

    def step(self, grads: dict[Tensor, np.ndarray]) -> None:
        for _, t in self.named_params:
            g = grads.get(t)
            if g is not None:
                t.data = t.data - self.lr * g


class Adam:
    """Adam with bias correction; beta1=0.9, beta2=0.999, eps=1e-8."""

    def __init__(self, named_params: list[tuple[str, Tensor]], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.named_params = named_params
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = {name: np.zeros(t.shape) for name, t in named_params}
        self.v = {name: np.zeros(t.shape) for name, t in named_params}

    def step(self, grads: dict[Tensor, np.ndarray]) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for name, t in self.named_params:
            g = grads.get(t)
            if g is None:
                continue
            self.m[name] = b1 * self.m[name] + (1 - b1) * g
            self.v[name] = b2 * self.v[name] + (1 - b2) * g * g
            mhat = self.m[name] / (1 - b1**self.t)
            vhat = self.v[name] / (1 - b2**self.t)
            t.data = t.data - self.lr * mhat / (np.sqrt(vhat) + self.eps)


def make_optimizer(kind: str, named_params, lr: float):
    if kind == "adam":
        return Adam(named_params, lr)
    if kind == "sgd":
        return Sgd(named_params, lr)
    raise ConfigError(f"optimizer must be 'adam' or 'sgd', got {kind!r}")


def split_dataset(videos: list[FeatureSequence], ratio: float, seed: int):
    """Seeded shuffle then prefix split; disjoint and exhaustive."""
    if len(videos) < 2:
        raise ContractError(f"need at least 2 videos to split, got {len(videos)}")
    if not 0.0 < ratio < 1.0:
        raise ConfigError(f"split ratio must lie in (0, 1), got {ratio!r}")
    order = np.random.default_rng(seed).permutation(len(videos))
    n_train = min(max(int(round(len(videos) * ratio)), 1), len(videos) - 1)
    train = [videos[i] for i in order[:n_train]]
    test = [videos[i] for i in order[n_train:]]
    return train, test


def _require_labels(videos: list[FeatureSequence], context: str):
    for v in videos:
        if v.mos is None:
            raise ContractError(f"{context}: video {v.video_id!r} has no MOS label")


def _batch_loss(batch: list[FeatureSequence], params: ModelParams) -> Tensor:
    per_video = []
    for v in batch:
        _, big_q = score_video(
            Tensor(v.features), Tensor(v.content), Tensor(v.distortion), params
        )
        per_video.append(ad.absolute(big_q - v.mos))
    return ad.mean(ad.stack_scalars(per_video))


def _params_finite(params: ModelParams) -> bool:
    return all(np.isfinite(t.data).all() for _, t in params.named_tensors())


def train(
    dataset: list[FeatureSequence],
    model_config: ModelConfig,
    train_config: TrainConfig,
    val: list[FeatureSequence] = None,
) -> tuple[ModelParams, list[dict]]:
    """Fit a fresh model on `dataset`; returns (params, per-epoch history).

    History rows carry the epoch's mean train loss and, when a validation
    set is supplied, its PLCC/SRCC under the training ablation config.
    """
    train_config.validate()
    if not dataset:
        raise ContractError("empty training set")
    _require_labels(dataset, "train")
    params = init_model(model_config)
    optimizer = make_optimizer(
        train_config.optimizer, params.trainable(), train_config.lr
    )
    rng = np.random.default_rng(train_config.train_seed)
    history: list[dict] = []
    for epoch in range(1, train_config.epochs + 1):
        snapshot = params.clone_data()
        order = rng.permutation(len(dataset))
        losses = []
        try:
            for start in range(0, len(dataset), train_config.batch_size):
                batch = [dataset[i] for i in order[start : start + train_config.batch_size]]
                loss = _batch_loss(batch, params)
                grads = ad.backward(loss)
                grads_by_tensor = {t: grads[t] for _, t in params.named_tensors() if t in grads}
                optimizer.step(grads_by_tensor)
                losses.append(loss.item())
            if not _params_finite(params):
                raise NonFiniteError("non-finite parameter after optimizer step")
        except NonFiniteError as e:
            params.restore_data(snapshot)
            raise TrainingDivergedError(
                f"training diverged in epoch {epoch}: {e}", params=params, history=history
            ) from e
        row = {"epoch": epoch, "train_loss": float(np.mean(losses))}
        if val:
            report = evaluate(params, val)
            row["val_plcc"] = report.plcc
            row["val_srcc"] = report.srcc
        history.append(row)
    return params, history


def evaluate(
    params: ModelParams,
    dataset: list[FeatureSequence],
    ablation: AblationConfig = None,
) -> EvalReport:
    """Predict every video and correlate with MOS.  An `ablation` override
    re-tags the run and drops the corresponding tokens / pooling at
    inference time."""
    if not dataset:
        raise ContractError("empty evaluation set")
    _require_labels(dataset, "evaluate")
    config = params.config if ablation is None else params.config.with_ablation(ablation)
    pairs = []
    for v in dataset:
        trace = predict_video(v, params, config)
        pairs.append((v.video_id, trace.Q, v.mos))
    preds = [p for _, p, _ in pairs]
    labels = [m for _, _, m in pairs]
    return EvalReport(
        plcc=plcc(preds, labels),
        srcc=srcc(preds, labels),
        pairs=pairs,
        tag=config.ablation.tag(),
    )


def format_report(report: EvalReport, include_pairs: bool = False) -> str:
    """Line-delimited report: metric name, value, ablation tag."""
    lines = [
        f"PLCC\t{report.plcc:.6f}\t{report.tag}",
        f"SRCC\t{report.srcc:.6f}\t{report.tag}",
        f"videos\t{len(report.pairs)}\t{report.tag}",
    ]
    if include_pairs:
        for vid, pred, mos in report.pairs:
            lines.append(f"video\t{vid}\t{pred:.6f}\t{mos:.6f}")
    return "\n".join(lines)
