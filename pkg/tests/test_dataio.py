"""Feature file format and the synthetic dataset generator."""

import struct
import zlib

import numpy as np
import pytest

from priorvqa.dataio import (
    FeatureSequence,
    SynthSpec,
    read_feature_file,
    recover_mos_least_squares,
    synth_dataset,
    write_feature_file,
)
from priorvqa.errors import (
    BadMagicError,
    ChecksumError,
    ConfigError,
    ContractError,
    NonFiniteError,
    ShapeOverflowError,
    TruncationError,
    VersionError,
)


def sample_sequence(seed=0, t_frames=3, mos=3.5):
    rng = np.random.default_rng(seed)
    return FeatureSequence(
        video_id="sample",
        features=rng.standard_normal((t_frames, 4, 6)),
        content=rng.standard_normal((t_frames, 5)),
        distortion=rng.standard_normal((t_frames, 5)),
        mos=mos,
    )


def rewrite_with_valid_crc(path, mutate):
    with open(path, "rb") as fh:
        payload = bytearray(fh.read()[:-4])
    mutate(payload)
    with open(path, "wb") as fh:
        fh.write(bytes(payload) + struct.pack("<I", zlib.crc32(bytes(payload))))


class TestRoundTrip:
    def test_values_survive_at_f32_precision(self, tmp_path):
        seq = sample_sequence()
        path = str(tmp_path / "v.pfvf")
        write_feature_file(seq, path)
        back = read_feature_file(path)
        assert back.shape_tuple == seq.shape_tuple
        # disk storage is f32: the round trip equals an f32 cast exactly
        np.testing.assert_array_equal(
            back.features, seq.features.astype(np.float32).astype(np.float64)
        )
        np.testing.assert_array_equal(
            back.content, seq.content.astype(np.float32).astype(np.float64)
        )
        assert back.mos == float(np.float32(seq.mos))

    def test_rewrite_idempotent(self, tmp_path):
        p1, p2 = str(tmp_path / "a.pfvf"), str(tmp_path / "b.pfvf")
        write_feature_file(sample_sequence(), p1)
        write_feature_file(read_feature_file(p1), p2)
        assert open(p1, "rb").read() == open(p2, "rb").read()

    def test_video_id_comes_from_filename(self, tmp_path):
        path = str(tmp_path / "clip-042.pfvf")
        write_feature_file(sample_sequence(), path)
        assert read_feature_file(path).video_id == "clip-042"

    def test_missing_mos_round_trips_as_none(self, tmp_path):
        seq = sample_sequence(mos=None)
        path = str(tmp_path / "v.pfvf")
        write_feature_file(seq, path)
        assert read_feature_file(path).mos is None


class TestMalformedFiles:
    def test_bad_magic(self, tmp_path):
        path = str(tmp_path / "v.pfvf")
        write_feature_file(sample_sequence(), path)
        rewrite_with_valid_crc(path, lambda b: b.__setitem__(slice(0, 4), b"XXXX"))
        with pytest.raises(BadMagicError, match="XXXX"):
            read_feature_file(path)

    def test_wrong_version(self, tmp_path):
        path = str(tmp_path / "v.pfvf")
        write_feature_file(sample_sequence(), path)
        rewrite_with_valid_crc(
            path, lambda b: b.__setitem__(slice(4, 8), struct.pack("<I", 2))
        )
        with pytest.raises(VersionError, match="2.*1"):
            read_feature_file(path)

    def test_corrupted_payload_byte(self, tmp_path):
        path = str(tmp_path / "v.pfvf")
        write_feature_file(sample_sequence(), path)
        with open(path, "rb") as fh:
            data = bytearray(fh.read())
        data[40] ^= 0xFF
        with open(path, "wb") as fh:
            fh.write(bytes(data))
        with pytest.raises(ChecksumError):
            read_feature_file(path)

    def test_header_promises_more_frames_than_present(self, tmp_path):
        path = str(tmp_path / "v.pfvf")
        write_feature_file(sample_sequence(t_frames=4), path)
        # bump T from 4 to 5 in the header; payload still has 4 frames
        rewrite_with_valid_crc(
            path, lambda b: b.__setitem__(slice(8, 12), struct.pack("<I", 5))
        )
        with pytest.raises(TruncationError):
            read_feature_file(path)

    def test_trailing_garbage_detected(self, tmp_path):
        path = str(tmp_path / "v.pfvf")
        write_feature_file(sample_sequence(), path)
        rewrite_with_valid_crc(path, lambda b: b.extend(b"\x00\x00\x00\x00"))
        with pytest.raises(TruncationError, match="trailing"):
            read_feature_file(path)

    def test_absurd_extent_rejected_before_allocation(self, tmp_path):
        path = str(tmp_path / "v.pfvf")
        write_feature_file(sample_sequence(), path)
        rewrite_with_valid_crc(
            path, lambda b: b.__setitem__(slice(12, 16), struct.pack("<I", 2**31 - 1))
        )
        with pytest.raises(ShapeOverflowError):
            read_feature_file(path)

    def test_file_shorter_than_checksum(self, tmp_path):
        path = str(tmp_path / "v.pfvf")
        with open(path, "wb") as fh:
            fh.write(b"PF")
        with pytest.raises(TruncationError):
            read_feature_file(path)


class TestSequenceContract:
    def test_frame_count_mismatch(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ContractError, match="content"):
            FeatureSequence(
                video_id="x",
                features=rng.standard_normal((3, 4, 6)),
                content=rng.standard_normal((2, 5)),
                distortion=rng.standard_normal((3, 5)),
            )

    def test_non_finite_rejected(self):
        rng = np.random.default_rng(1)
        feats = rng.standard_normal((2, 4, 6))
        feats[1, 2, 3] = np.inf
        with pytest.raises(NonFiniteError):
            FeatureSequence(
                video_id="x",
                features=feats,
                content=rng.standard_normal((2, 5)),
                distortion=rng.standard_normal((2, 5)),
            )


class TestSynth:
    def test_count_and_label_range(self):
        videos = synth_dataset(SynthSpec(count=10, T=3, seed=0))
        assert len(videos) == 10
        for v in videos:
            assert 1.0 <= v.mos <= 5.0
            assert v.shape_tuple == (3, 4, 16, 8, 8)

    def test_same_seed_identical(self):
        a = synth_dataset(SynthSpec(count=4, T=2, seed=9))
        b = synth_dataset(SynthSpec(count=4, T=2, seed=9))
        for va, vb in zip(a, b):
            assert va.mos == vb.mos
            assert np.array_equal(va.features, vb.features)
            assert np.array_equal(va.distortion, vb.distortion)

    def test_different_seed_differs(self):
        a = synth_dataset(SynthSpec(count=1, T=2, seed=1))[0]
        b = synth_dataset(SynthSpec(count=1, T=2, seed=2))[0]
        assert not np.array_equal(a.features, b.features)

    def test_noiseless_mos_recoverable_by_least_squares(self):
        spec = SynthSpec(count=20, T=3, sigma=0.0, seed=5)
        videos = synth_dataset(spec)
        recovered = recover_mos_least_squares(videos, spec)
        actual = np.array([v.mos for v in videos])
        rel = np.abs(recovered - actual) / np.abs(actual)
        assert rel.max() <= 1e-9

    def test_noisy_recovery_is_approximate(self):
        spec = SynthSpec(count=20, T=3, sigma=0.1, seed=6)
        videos = synth_dataset(spec)
        recovered = recover_mos_least_squares(videos, spec)
        actual = np.array([v.mos for v in videos])
        assert np.abs(recovered - actual).max() < 0.5

    def test_spec_validation(self):
        with pytest.raises(ConfigError):
            SynthSpec(count=0).validate()
        with pytest.raises(ConfigError):
            SynthSpec(sigma=-0.1).validate()
