"""Turn videos into PFVF feature-interchange files.

Frames are sampled at a fixed rate, resized, and run through three frozen
towers: a ResNet-50 feature map (raw tokens), a CLIP-style ViT-B/16 image
encoder (content embedding), and a small classifier backbone (distortion
embedding). The result is written in the PFVF byte format consumed by the
quality model package.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    ExporterError,
    MissingWeightsError,
    UndecodableVideoError,
    WidthMismatchError,
)
from .export import ExportReport, export
from .extractors import ExtractorConfig, FrameExtractors, build_extractors
from .pfvf import write_pfvf
from .sampling import probe_video, sample_frames

__all__ = [
    "__version__",
    "ConfigError",
    "ExporterError",
    "ExportReport",
    "ExtractorConfig",
    "FrameExtractors",
    "MissingWeightsError",
    "UndecodableVideoError",
    "WidthMismatchError",
    "build_extractors",
    "export",
    "probe_video",
    "sample_frames",
    "write_pfvf",
]
