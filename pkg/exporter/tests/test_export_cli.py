"""Command-line behavior: output line, exit codes, usage errors."""

import re

import pytest

from pfvf_exporter.cli import (
    EXIT_CONFIG,
    EXIT_MISSING,
    EXIT_OK,
    EXIT_UNDECODABLE,
    EXIT_WEIGHTS,
    main,
)


class TestSuccess:
    def test_summary_line(self, three_second_clip, tmp_path, capsys):
        out = tmp_path / "clip.pfvf"
        code = main(["--video", three_second_clip, "--out", str(out)])
        assert code == EXIT_OK
        line = capsys.readouterr().out.strip()
        assert line == f"wrote {out} (T=3, N=49, C_feat=2048, C_cont=512, C_dist=512)"
        assert out.is_file()

    def test_mos_in_summary(self, three_second_clip, tmp_path, capsys):
        out = tmp_path / "clip.pfvf"
        code = main(["--video", three_second_clip, "--out", str(out), "--mos", "3.2"])
        assert code == EXIT_OK
        assert capsys.readouterr().out.strip().endswith(", mos=3.2)")


class TestFailures:
    def test_missing_video(self, tmp_path, capsys):
        code = main(["--video", str(tmp_path / "gone.avi"), "--out", str(tmp_path / "x.pfvf")])
        assert code == EXIT_MISSING
        assert capsys.readouterr().err.startswith("error [FileNotFoundError]:")

    def test_undecodable_video(self, tmp_path, capsys):
        bogus = tmp_path / "fake.avi"
        bogus.write_text("not a container")
        code = main(["--video", str(bogus), "--out", str(tmp_path / "x.pfvf")])
        assert code == EXIT_UNDECODABLE
        assert capsys.readouterr().err.startswith("error [UndecodableVideoError]:")

    def test_bad_size(self, three_second_clip, tmp_path, capsys):
        code = main(["--video", three_second_clip, "--out", str(tmp_path / "x.pfvf"),
                     "--size", "100"])
        assert code == EXIT_CONFIG
        assert "error [ConfigError]:" in capsys.readouterr().err

    def test_bad_fps(self, three_second_clip, tmp_path):
        code = main(["--video", three_second_clip, "--out", str(tmp_path / "x.pfvf"),
                     "--fps", "0"])
        assert code == EXIT_CONFIG

    def test_pretrained_without_caches(self, three_second_clip, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("TORCH_HOME", str(tmp_path))
        code = main(["--video", three_second_clip, "--out", str(tmp_path / "x.pfvf"),
                     "--weights", "pretrained"])
        assert code == EXIT_WEIGHTS
        assert capsys.readouterr().err.startswith("error [MissingWeightsError]:")


class TestUsage:
    def test_video_required(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["--out", str(tmp_path / "x.pfvf")])
        assert exc.value.code == 2

    def test_unknown_flag(self, three_second_clip, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["--video", three_second_clip, "--out", str(tmp_path / "x.pfvf"), "--bogus"])
        assert exc.value.code == 2

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert re.fullmatch(r"pfvf-export \d+\.\d+\.\d+", capsys.readouterr().out.strip())

    def test_help(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--help"])
        assert exc.value.code == 0
        assert "--weights" in capsys.readouterr().out
