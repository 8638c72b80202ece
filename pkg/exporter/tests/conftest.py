"""Shared fixtures: tiny fabricated clips and a reusable tower bundle."""

import cv2
import numpy as np
import pytest

from pfvf_exporter import ExtractorConfig, build_extractors

FPS = 25.0
WIDTH, HEIGHT = 64, 48


def make_frame(i: int, width: int = WIDTH, height: int = HEIGHT) -> np.ndarray:
    """Deterministic moving pattern so neighboring frames differ."""
    frame = np.zeros((height, width, 3), np.uint8)
    frame[:, :, 0] = np.linspace(0, 255, width, dtype=np.uint8)[None, :]
    frame[:, :, 1] = (i * 7) % 256
    x = (i * 3) % (width - 16)
    frame[8:24, x : x + 16, 2] = 230
    return frame


def write_clip(path, frame_count: int, fps: float = FPS) -> str:
    writer = cv2.VideoWriter(
        str(path), cv2.VideoWriter_fourcc(*"MJPG"), fps, (WIDTH, HEIGHT)
    )
    assert writer.isOpened(), "MJPG writer unavailable"
    for i in range(frame_count):
        writer.write(make_frame(i))
    writer.release()
    return str(path)


@pytest.fixture(scope="session")
def eight_second_clip(tmp_path_factory):
    """25 fps x 200 frames = 8.0 s."""
    return write_clip(tmp_path_factory.mktemp("clips") / "clip8s.avi", 200)


@pytest.fixture(scope="session")
def three_second_clip(tmp_path_factory):
    return write_clip(tmp_path_factory.mktemp("clips") / "clip3s.avi", 75)


@pytest.fixture(scope="session")
def towers():
    """Default random-weight extractors, built once; towers are frozen so
    sharing across tests is safe."""
    return build_extractors(ExtractorConfig())
