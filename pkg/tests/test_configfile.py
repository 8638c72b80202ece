"""Key=value config file parsing and coercion."""

import pytest

from priorvqa.configfile import load_config_file, parse_kv_text, split_config_keys
from priorvqa.errors import ConfigError


class TestParse:
    def test_coercion(self):
        text = "epochs = 30\nlr = 3e-3\nuse_gru = false\noptimizer = adam\n"
        got = parse_kv_text(text)
        assert got == {"epochs": 30, "lr": 3e-3, "use_gru": False, "optimizer": "adam"}

    def test_comments_and_blanks_ignored(self):
        text = "# schedule\n\nepochs = 5  # short run\n"
        assert parse_kv_text(text) == {"epochs": 5}

    def test_duplicate_key_rejected_with_line_number(self):
        with pytest.raises(ConfigError, match=r":3: duplicate key 'lr'"):
            parse_kv_text("lr = 1e-3\n\nlr = 2e-3\n")

    def test_missing_equals_rejected(self):
        with pytest.raises(ConfigError, match=r":1: expected key=value"):
            parse_kv_text("epochs 30\n")

    def test_bool_spellings(self):
        text = "a = true\nb = no\nc = 1\nd = off\n"
        got = parse_kv_text(text)
        assert got == {"a": True, "b": False, "c": 1, "d": "off"}


class TestLoadAndSplit:
    def test_round_trip_through_file(self, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text("epochs = 2\nD = 16\ntau = 3\n")
        got = load_config_file(p)
        model_part, train_part = split_config_keys(got)
        assert model_part == {"D": 16, "tau": 3}
        assert train_part == {"epochs": 2}

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_config_file(tmp_path / "absent.cfg")

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="warmup"):
            split_config_keys({"warmup": 5})
