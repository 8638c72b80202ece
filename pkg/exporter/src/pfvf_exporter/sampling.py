"""Frame sampling and preprocessing.

Frames are pulled at a fixed rate (default one per second of video), so the
sampled count tracks the clip duration: an 8 second clip yields 8 frames.
Decoding walks the stream sequentially with grab/retrieve instead of
seeking, because container seeks are codec-dependent and would break the
byte-for-byte reproducibility of an export.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import cv2
import numpy as np

from .errors import ConfigError, UndecodableVideoError


@dataclass(frozen=True)
class VideoInfo:
    path: str
    frame_count: int
    fps: float

    @property
    def duration(self) -> float:
        return self.frame_count / self.fps


def probe_video(path: str) -> VideoInfo:
    if not os.path.isfile(path):
        raise FileNotFoundError(path)
    cap = cv2.VideoCapture(path)
    try:
        if not cap.isOpened():
            raise UndecodableVideoError(f"{path}: cannot open as video")
        fps = cap.get(cv2.CAP_PROP_FPS)
        frame_count = int(cap.get(cv2.CAP_PROP_FRAME_COUNT))
        if fps <= 0 or frame_count <= 0:
            raise UndecodableVideoError(
                f"{path}: no decodable frames (fps={fps}, frames={frame_count})"
            )
        return VideoInfo(path=path, frame_count=frame_count, fps=fps)
    finally:
        cap.release()


def sample_indices(frame_count: int, src_fps: float, rate: float) -> list[int]:
    """Source frame indices for sampling at `rate` frames per second.

    One index per full sampling period that fits in the clip, at least one
    for any decodable clip, clamped into range."""
    if rate <= 0:
        raise ConfigError(f"sampling rate must be positive, got {rate!r}")
    step = src_fps / rate
    count = max(1, int(frame_count / step))
    return [min(int(round(k * step)), frame_count - 1) for k in range(count)]


def sample_frames(path: str, rate: float = 1.0, size: int = 224) -> np.ndarray:
    """Decode, sample, and resize; returns RGB uint8 of shape (T, size, size, 3)."""
    if size < 1:
        raise ConfigError(f"resize target must be positive, got {size!r}")
    info = probe_video(path)
    wanted = sample_indices(info.frame_count, info.fps, rate)
    remaining = set(wanted)
    frames: dict[int, np.ndarray] = {}
    cap = cv2.VideoCapture(path)
    try:
        for index in range(max(wanted) + 1):
            if not cap.grab():
                raise UndecodableVideoError(f"{path}: decode failed at frame {index}")
            if index not in remaining:
                continue
            ok, bgr = cap.retrieve()
            if not ok:
                raise UndecodableVideoError(f"{path}: decode failed at frame {index}")
            resized = cv2.resize(bgr, (size, size), interpolation=cv2.INTER_AREA)
            frames[index] = cv2.cvtColor(resized, cv2.COLOR_BGR2RGB)
            remaining.discard(index)
    finally:
        cap.release()
    # a sampled index may repeat when the clip is shorter than one period
    return np.stack([frames[i] for i in wanted])
