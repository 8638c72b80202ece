"""Model composition: init, prediction, ablations, parameter files."""

import struct
import zlib

import numpy as np
import pytest

import oracles
from priorvqa.dataio import SynthSpec, synth_dataset
from priorvqa.encoder import AblationConfig, EncoderConfig
from priorvqa.errors import (
    BadMagicError,
    ChecksumError,
    ConfigError,
    FormatError,
    TruncationError,
    VersionError,
)
from priorvqa.model import (
    ModelConfig,
    init_model,
    load_params,
    predict_video,
    save_params,
)
from priorvqa.temporal import PoolingConfig

TINY = ModelConfig(
    encoder=EncoderConfig(L=2, H=2, D=8, D_ff=16, N=4, C_feat=6, C_cont=5, C_dist=5),
    gru_hidden=4,
    pooling=PoolingConfig(tau=2, gamma=0.5),
)


def tiny_videos(count=2, t_frames=3, seed=0, sigma=0.1):
    return synth_dataset(
        SynthSpec(count=count, T=t_frames, N=4, C_feat=6, C_cont=5, C_dist=5,
                  sigma=sigma, seed=seed)
    )


def corrupt(path, offset, delta=1):
    with open(path, "rb") as fh:
        data = bytearray(fh.read())
    data[offset] = (data[offset] + delta) % 256
    with open(path, "wb") as fh:
        fh.write(bytes(data))


def rewrite_with_valid_crc(path, mutate):
    """Apply `mutate` to the payload bytes, then re-append a correct CRC."""
    with open(path, "rb") as fh:
        payload = bytearray(fh.read()[:-4])
    mutate(payload)
    with open(path, "wb") as fh:
        fh.write(bytes(payload) + struct.pack("<I", zlib.crc32(bytes(payload))))


class TestInit:
    def test_same_seed_bit_identical(self):
        a = init_model(TINY)
        b = init_model(TINY)
        for (name_a, ta), (_, tb) in zip(a.named_tensors(), b.named_tensors()):
            assert np.array_equal(ta.data, tb.data), name_a

    def test_different_seed_differs(self):
        a = init_model(TINY)
        b = init_model(ModelConfig(encoder=TINY.encoder, gru_hidden=4,
                                   pooling=TINY.pooling, seed=1))
        assert not np.array_equal(a.encoder.w_feat.data, b.encoder.w_feat.data)

    def test_parameter_count_closed_form(self):
        e = TINY.encoder
        dh = TINY.gru_hidden
        projections = (e.C_feat + 1 + e.C_cont + 1 + e.C_dist + 1) * e.D
        tokens = e.D + (e.N + 3) * e.D
        per_layer = (
            4 * e.D * e.D + 3 * e.D        # attention projections, no key bias
            + e.D * e.D_ff + e.D_ff        # feed-forward in
            + e.D_ff * e.D + e.D           # feed-forward out
            + 4 * e.D                      # two layer-norm gain/bias pairs
        )
        gru = 3 * (e.D * dh + dh * dh + dh) + dh * 1 + 1
        expected = projections + tokens + TINY.encoder.L * per_layer + gru
        assert init_model(TINY).total_parameter_count() == expected

    def test_head_mismatch_rejected(self):
        bad = ModelConfig(encoder=EncoderConfig(D=10, H=4))
        with pytest.raises(ConfigError):
            init_model(bad)

    def test_bad_extents_rejected(self):
        with pytest.raises(ConfigError):
            init_model(ModelConfig(gru_hidden=0))

    def test_gru_ablation_resizes_score_head(self):
        cfg = ModelConfig(
            encoder=TINY.encoder, gru_hidden=4, pooling=TINY.pooling,
            ablation=AblationConfig(use_gru=False),
        )
        params = init_model(cfg)
        assert params.gru.w_fc.shape == (TINY.encoder.D, 1)
        assert init_model(TINY).gru.w_fc.shape == (4, 1)


class TestPredict:
    def test_trace_lengths(self):
        params = init_model(TINY)
        video = tiny_videos(1, t_frames=8)[0]
        trace = predict_video(video, params)
        assert len(trace.q) == len(trace.m) == len(trace.c) == 8

    def test_deterministic(self):
        params = init_model(TINY)
        video = tiny_videos(1)[0]
        a = predict_video(video, params)
        b = predict_video(video, params)
        assert a.Q == b.Q and np.array_equal(a.q, b.q)

    def test_no_pooling_ablation_scores_mean(self):
        cfg = TINY.with_ablation(AblationConfig(use_temporal_pooling=False))
        params = init_model(cfg)
        video = tiny_videos(1, t_frames=5)[0]
        trace = predict_video(video, params)
        assert abs(trace.Q - trace.q.mean()) < 1e-12

    def test_gru_ablation_still_scores(self):
        cfg = TINY.with_ablation(AblationConfig(use_gru=False))
        params = init_model(cfg)
        trace = predict_video(tiny_videos(1)[0], params)
        assert np.isfinite(trace.Q)

    @pytest.mark.parametrize("seed", range(3))
    def test_matches_straight_line_reference(self, seed):
        cfg = ModelConfig(encoder=TINY.encoder, gru_hidden=4, pooling=TINY.pooling,
                          seed=seed)
        params = init_model(cfg)
        video = tiny_videos(1, t_frames=4, seed=100 + seed)[0]
        trace = predict_video(video, params)
        ref = oracles.params_to_lists(params)
        q_ref, big_q_ref = oracles.predict_video(
            video.features.tolist(), video.content.tolist(), video.distortion.tolist(),
            ref, n_heads=cfg.encoder.H, tau=cfg.pooling.tau, gamma=cfg.pooling.gamma,
        )
        np.testing.assert_allclose(trace.q, q_ref, atol=1e-9)
        assert abs(trace.Q - big_q_ref) <= 1e-9


class TestParamFiles:
    def test_round_trip_bit_exact(self, tmp_path):
        params = init_model(TINY)
        path = str(tmp_path / "m.pfmp")
        save_params(params, path)
        loaded = load_params(path)
        assert loaded.config == params.config
        for (name_a, ta), (_, tb) in zip(params.named_tensors(), loaded.named_tensors()):
            assert np.array_equal(ta.data, tb.data), name_a

    def test_round_trip_preserves_predictions_exactly(self, tmp_path):
        params = init_model(TINY)
        video = tiny_videos(1)[0]
        path = str(tmp_path / "m.pfmp")
        save_params(params, path)
        assert predict_video(video, load_params(path)).Q == predict_video(video, params).Q

    def test_rewrite_is_byte_identical(self, tmp_path):
        params = init_model(TINY)
        p1, p2 = str(tmp_path / "a.pfmp"), str(tmp_path / "b.pfmp")
        save_params(params, p1)
        save_params(load_params(p1), p2)
        assert open(p1, "rb").read() == open(p2, "rb").read()

    def test_corrupt_byte_fails_checksum(self, tmp_path):
        path = str(tmp_path / "m.pfmp")
        save_params(init_model(TINY), path)
        corrupt(path, offset=30)
        with pytest.raises(ChecksumError):
            load_params(path)

    def test_bad_magic(self, tmp_path):
        path = str(tmp_path / "m.pfmp")
        save_params(init_model(TINY), path)
        rewrite_with_valid_crc(path, lambda b: b.__setitem__(slice(0, 4), b"XXXX"))
        with pytest.raises(BadMagicError):
            load_params(path)

    def test_version_error_names_both_versions(self, tmp_path):
        path = str(tmp_path / "m.pfmp")
        save_params(init_model(TINY), path)
        rewrite_with_valid_crc(
            path, lambda b: b.__setitem__(slice(4, 8), struct.pack("<I", 9))
        )
        with pytest.raises(VersionError, match="9.*1"):
            load_params(path)

    def test_truncation(self, tmp_path):
        path = str(tmp_path / "m.pfmp")
        save_params(init_model(TINY), path)
        with open(path, "rb") as fh:
            data = fh.read()
        payload = data[:-4]
        cut = payload[: len(payload) - 64]
        with open(path, "wb") as fh:
            fh.write(cut + struct.pack("<I", zlib.crc32(cut)))
        with pytest.raises(TruncationError):
            load_params(path)

    def test_config_tensor_mismatch(self, tmp_path):
        # valid tensor table, but the embedded config promises different shapes
        path = str(tmp_path / "m.pfmp")
        save_params(init_model(TINY), path)
        with open(path, "rb") as fh:
            payload = bytearray(fh.read()[:-4])
        old = b'"gru_hidden":4'
        idx = payload.find(old)
        assert idx > 0
        payload[idx : idx + len(old)] = b'"gru_hidden":5'
        with open(str(tmp_path / "m2.pfmp"), "wb") as fh:
            fh.write(bytes(payload) + struct.pack("<I", zlib.crc32(bytes(payload))))
        with pytest.raises(FormatError):
            load_params(str(tmp_path / "m2.pfmp"))


class TestConfigDict:
    def test_round_trip(self):
        cfg = TINY.with_ablation(AblationConfig(use_distortion_token=False))
        assert ModelConfig.from_dict(cfg.to_dict()) == cfg

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="dropout"):
            ModelConfig.from_dict({"dropout": 0.1})

    def test_ablation_tags(self):
        assert AblationConfig().tag() == "full"
        assert AblationConfig(use_content_token=False).tag() == "w.o. CT"
        both_off = AblationConfig(use_content_token=False, use_distortion_token=False)
        assert both_off.tag() == "w.o. CT+DT"
        assert AblationConfig(use_temporal_pooling=False).tag() == "w.o. TP"
