"""One video in, one PFVF file out."""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional

import torch

from .errors import WidthMismatchError
from .extractors import ExtractorConfig, FrameExtractors, build_extractors
from .pfvf import write_pfvf
from .sampling import sample_frames


@dataclass(frozen=True)
class ExportReport:
    out_path: str
    header: tuple  # (T, N, C_feat, C_cont, C_dist)
    mos: Optional[float]
    bytes_written: int


def export(
    video_path: str,
    config: ExtractorConfig = None,
    out_path: str = None,
    mos: Optional[float] = None,
    extractors: FrameExtractors = None,
) -> ExportReport:
    """Sample, extract, and write one feature file.

    Pass a prebuilt `extractors` bundle to amortize tower construction over
    many videos; otherwise one is built from `config`. Inference is pinned
    to a single thread so repeated exports of the same video are
    byte-identical.
    """
    if out_path is None:
        raise ValueError("out_path is required")
    config = (config or ExtractorConfig()).validate()
    frames = sample_frames(video_path, rate=config.rate, size=config.size)
    if extractors is None:
        extractors = build_extractors(config)
    previous_threads = torch.get_num_threads()
    torch.set_num_threads(1)
    try:
        features, content, distortion = extractors.run(frames)
    finally:
        torch.set_num_threads(previous_threads)

    declared = (config.n_tokens, config.c_feat, config.c_cont, config.c_dist)
    actual = (features.shape[1], features.shape[2], content.shape[1], distortion.shape[1])
    if actual != declared:
        raise WidthMismatchError(
            f"extractor widths (N, C_feat, C_cont, C_dist) = {actual}, "
            f"config declares {declared}"
        )

    parent = os.path.dirname(os.path.abspath(out_path))
    os.makedirs(parent, exist_ok=True)
    written = write_pfvf(out_path, features, content, distortion, mos)
    header = (frames.shape[0],) + declared
    return ExportReport(out_path=out_path, header=header, mos=mos, bytes_written=written)
