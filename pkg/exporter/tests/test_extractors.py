"""Tower outputs: widths, determinism, seeding, config validation."""

import numpy as np
import pytest

from pfvf_exporter import (
    ExtractorConfig,
    MissingWeightsError,
    build_extractors,
    sample_frames,
)
from pfvf_exporter.errors import ConfigError


@pytest.fixture(scope="module")
def frames(three_second_clip):
    return sample_frames(three_second_clip)


class TestOutputs:
    def test_shapes_and_dtype(self, towers, frames):
        features, content, distortion = towers.run(frames)
        assert features.shape == (3, 49, 2048)
        assert content.shape == (3, 512)
        assert distortion.shape == (3, 512)
        for arr in (features, content, distortion):
            assert arr.dtype == np.float32
            assert np.isfinite(arr).all()

    def test_run_is_deterministic(self, towers, frames):
        first = towers.run(frames)
        second = towers.run(frames)
        for a, b in zip(first, second):
            assert np.array_equal(a, b)

    def test_same_seed_rebuild_matches(self, towers, frames):
        rebuilt = build_extractors(ExtractorConfig())
        for a, b in zip(towers.run(frames), rebuilt.run(frames)):
            assert np.array_equal(a, b)

    def test_different_seed_differs(self, towers, frames):
        other = build_extractors(ExtractorConfig(seed=1))
        for a, b in zip(towers.run(frames), other.run(frames)):
            assert not np.array_equal(a, b)

    def test_content_separates_flat_from_textured(self, towers):
        flat = np.full((224, 224, 3), 127, np.uint8)
        textured = np.zeros((224, 224, 3), np.uint8)
        textured[:, :, 0] = np.linspace(0, 255, 224, dtype=np.uint8)[None, :]
        textured[64:128, 32:96, 2] = 230
        _, content, _ = towers.run(np.stack([flat, textured]))
        norms = np.linalg.norm(content, axis=1)
        assert (norms > 0).all()
        assert not np.allclose(content[0], content[1])

    def test_gradients_disabled(self, towers):
        for module in (towers._backbone, towers._content, towers._distortion):
            assert not module.training
            assert all(not p.requires_grad for p in module.parameters())

    def test_token_grid_follows_size(self, three_second_clip):
        config = ExtractorConfig(size=160)
        small = build_extractors(config)
        features, _, _ = small.run(sample_frames(three_second_clip, size=160))
        assert config.n_tokens == 25
        assert features.shape == (3, 25, 2048)


class TestPretrainedGate:
    def test_missing_caches_refuse(self, monkeypatch, tmp_path):
        # an empty hub directory: the loader must error out, not download
        monkeypatch.setenv("TORCH_HOME", str(tmp_path))
        with pytest.raises(MissingWeightsError, match="weights='random'"):
            build_extractors(ExtractorConfig(weights="pretrained"))


class TestConfigValidation:
    @pytest.mark.parametrize(
        "kwargs, field",
        [
            ({"rate": 0.0}, "rate"),
            ({"rate": -1.0}, "rate"),
            ({"size": 100}, "size"),
            ({"size": 0}, "size"),
            ({"weights": "fancy"}, "weights"),
            ({"seed": -1}, "seed"),
            ({"backbone": "vgg16"}, "backbone"),
            ({"content_encoder": "dino"}, "content_encoder"),
            ({"distortion_encoder": "none"}, "distortion_encoder"),
            ({"weights": "pretrained", "size": 160}, "pretrained"),
        ],
    )
    def test_rejects(self, kwargs, field):
        with pytest.raises(ConfigError, match=field):
            ExtractorConfig(**kwargs).validate()

    def test_default_widths(self):
        config = ExtractorConfig().validate()
        assert (config.n_tokens, config.c_feat, config.c_cont, config.c_dist) == (
            49, 2048, 512, 512,
        )
