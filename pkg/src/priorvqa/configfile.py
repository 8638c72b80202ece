"""Flat key=value config files for the CLI.

One assignment per line; `#` starts a comment; blank lines ignored.  Keys
mirror the model / training config dictionaries exactly, so the same file
can carry both (each parser picks out its own keys).  Unknown keys are
rejected by the config constructors.
"""

from __future__ import annotations

import os

from .errors import ConfigError
from .model import ModelConfig
from .training import TrainConfig

_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def parse_kv_text(text: str, path: str = "<config>") -> dict:
    out: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line.strip()!r}")
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise ConfigError(f"{path}:{lineno}: empty key or value")
        if key in out:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = _coerce(value)
    return out


def _coerce(value: str):
    low = value.lower()
    if low in _BOOL:
        return _BOOL[low]
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        pass
    return value


def load_config_file(path: str) -> dict:
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path, "r", encoding="utf-8") as fh:
        return parse_kv_text(fh.read(), path)


def split_config_keys(raw: dict) -> tuple[dict, dict]:
    """Partition a flat dict into (model keys, train keys); anything neither
    config recognizes is an error naming the key."""
    model_keys = set(ModelConfig().to_dict())
    train_keys = set(TrainConfig().to_dict())
    model_part, train_part = {}, {}
    for key, value in raw.items():
        if key in model_keys:
            model_part[key] = value
        elif key in train_keys:
            train_part[key] = value
        else:
            raise ConfigError(f"unknown config key {key!r}")
    return model_part, train_part
