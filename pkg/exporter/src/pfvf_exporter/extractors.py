"""The three framewise feature towers.

Raw feature tokens come from a ResNet-50 final convolutional map (one token
per spatial cell, row-major, so a 224 input yields 7x7 = 49 tokens of width
2048). The content embedding is the 512-wide projected output of a
CLIP-style ViT-B/16 image encoder. The distortion embedding is the
penultimate 512-wide pooled feature of a small classifier backbone
(ResNet-18 trunk); it stands in for a dedicated distortion network whose
published weights are not redistributable, and the file header records
whichever width is emitted, so consumers stay agnostic.

Weight modes:

    random      seeded initialization, no downloads. Deterministic and
                structurally faithful, but the embeddings carry no
                perceptual meaning; meant for pipeline work and tests.
    pretrained  loads real weights from local caches only (torchvision
                checkpoint directory, transformers cache) and raises
                MissingWeightsError rather than touching the network.

All towers run in eval mode with gradients disabled.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from urllib.parse import urlsplit

import numpy as np
import torch
from torchvision.models import ResNet18_Weights, ResNet50_Weights, resnet18, resnet50
from transformers import CLIPVisionConfig, CLIPVisionModelWithProjection

from .errors import ConfigError, MissingWeightsError

_BACKBONE_ID = "resnet50"
_CONTENT_ID = "clip-vit-b16"
_DISTORTION_ID = "distortion-cnn"
_CLIP_PRETRAINED_ID = "openai/clip-vit-base-patch16"

_IMAGENET_MEAN = (0.485, 0.456, 0.406)
_IMAGENET_STD = (0.229, 0.224, 0.225)
_CLIP_MEAN = (0.48145466, 0.4578275, 0.40821073)
_CLIP_STD = (0.26862954, 0.26130258, 0.27577711)

# ResNet-50 reduces resolution by 2 five times before the final map
_BACKBONE_STRIDE = 32


@dataclass(frozen=True)
class ExtractorConfig:
    rate: float = 1.0  # sampled frames per second of video
    size: int = 224  # square resize target
    weights: str = "random"  # "random" or "pretrained"
    seed: int = 0  # init seed for random weights
    backbone: str = _BACKBONE_ID
    content_encoder: str = _CONTENT_ID
    distortion_encoder: str = _DISTORTION_ID

    def validate(self) -> "ExtractorConfig":
        if self.rate <= 0:
            raise ConfigError(f"rate must be positive, got {self.rate!r}")
        if (
            not isinstance(self.size, int)
            or self.size < _BACKBONE_STRIDE
            or self.size % _BACKBONE_STRIDE
        ):
            raise ConfigError(
                f"size must be a positive multiple of {_BACKBONE_STRIDE}, got {self.size!r}"
            )
        if self.weights not in ("random", "pretrained"):
            raise ConfigError(f"weights must be 'random' or 'pretrained', got {self.weights!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed must be a nonnegative integer, got {self.seed!r}")
        for field, value, known in (
            ("backbone", self.backbone, _BACKBONE_ID),
            ("content_encoder", self.content_encoder, _CONTENT_ID),
            ("distortion_encoder", self.distortion_encoder, _DISTORTION_ID),
        ):
            if value != known:
                raise ConfigError(f"unknown {field} {value!r}, expected {known!r}")
        if self.weights == "pretrained" and self.size != 224:
            raise ConfigError("pretrained weights fix the input size at 224")
        return self

    # declared header widths; export() checks actual outputs against these
    @property
    def n_tokens(self) -> int:
        return (self.size // _BACKBONE_STRIDE) ** 2

    @property
    def c_feat(self) -> int:
        return 2048

    @property
    def c_cont(self) -> int:
        return 512

    @property
    def c_dist(self) -> int:
        return 512


def _pixels(frames: np.ndarray, mean, std) -> torch.Tensor:
    """(T, S, S, 3) uint8 RGB -> normalized (T, 3, S, S) float32."""
    x = torch.from_numpy(np.ascontiguousarray(frames)).float().div_(255.0)
    x = x.permute(0, 3, 1, 2)
    m = torch.tensor(mean).view(1, 3, 1, 1)
    s = torch.tensor(std).view(1, 3, 1, 1)
    return (x - m) / s


def _freeze(module: torch.nn.Module) -> torch.nn.Module:
    module.eval()
    for p in module.parameters():
        p.requires_grad_(False)
    return module


def _require_cached(weights) -> None:
    """Refuse to download: the checkpoint must already sit in the hub cache."""
    filename = os.path.basename(urlsplit(weights.url).path)
    cache = os.path.join(torch.hub.get_dir(), "checkpoints")
    if not os.path.isfile(os.path.join(cache, filename)):
        raise MissingWeightsError(
            f"{filename} not found under {cache}; place it there or use weights='random'"
        )


class FrameExtractors:
    """The three towers bundled; build with build_extractors()."""

    def __init__(self, config: ExtractorConfig, backbone, content, distortion):
        self.config = config
        self._backbone = backbone
        self._content = content
        self._distortion = distortion

    def run(self, frames: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(T, S, S, 3) uint8 RGB -> features (T, N, C_feat), content
        (T, C_cont), distortion (T, C_dist), all float32."""
        x_imagenet = _pixels(frames, _IMAGENET_MEAN, _IMAGENET_STD)
        x_clip = _pixels(frames, _CLIP_MEAN, _CLIP_STD)
        with torch.no_grad():
            fmap = self._backbone(x_imagenet)  # (T, C_feat, g, g)
            t, c_feat = fmap.shape[0], fmap.shape[1]
            features = fmap.permute(0, 2, 3, 1).reshape(t, -1, c_feat)
            content = self._content(pixel_values=x_clip).image_embeds
            distortion = self._distortion(x_imagenet).flatten(1)
        return (
            features.numpy().astype(np.float32, copy=False),
            content.numpy().astype(np.float32, copy=False),
            distortion.numpy().astype(np.float32, copy=False),
        )


def build_extractors(config: ExtractorConfig) -> FrameExtractors:
    """Construct all towers; with weights='random' one seed pins every value
    (towers draw from the global generator in a fixed order)."""
    config.validate()
    pretrained = config.weights == "pretrained"
    torch.manual_seed(config.seed)

    if pretrained:
        _require_cached(ResNet50_Weights.IMAGENET1K_V2)
        r50 = resnet50(weights=ResNet50_Weights.IMAGENET1K_V2)
    else:
        r50 = resnet50(weights=None)
    backbone = _freeze(torch.nn.Sequential(*list(r50.children())[:-2]))

    if pretrained:
        try:
            content = CLIPVisionModelWithProjection.from_pretrained(
                _CLIP_PRETRAINED_ID, local_files_only=True
            )
        except OSError as e:
            raise MissingWeightsError(
                f"{_CLIP_PRETRAINED_ID} is not in the local transformers cache"
            ) from e
    else:
        content = CLIPVisionModelWithProjection(
            CLIPVisionConfig(patch_size=16, projection_dim=512, image_size=config.size)
        )
    content = _freeze(content)

    if pretrained:
        _require_cached(ResNet18_Weights.IMAGENET1K_V1)
        r18 = resnet18(weights=ResNet18_Weights.IMAGENET1K_V1)
    else:
        r18 = resnet18(weights=None)
    distortion = _freeze(torch.nn.Sequential(*list(r18.children())[:-1]))

    return FrameExtractors(config, backbone, content, distortion)
