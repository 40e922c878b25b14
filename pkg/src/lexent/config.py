"""Nested JSON configuration with dotted-key overrides."""

from __future__ import annotations

import copy
import json
import os
from pathlib import Path

from .errors import DataError

DEFAULTS: dict = {
    "corpus": {"filter_language": None, "language_threshold": 0.05, "abbreviations": None},
    "bm25": {"k1": 1.5, "b": 0.75, "k": 100},
    "chunk": {"window": 150, "stride": 50},
    "datagen": {"cap": 150, "augment_n": 5, "neg_ratio": 1.0, "sample_rate": 1.0, "rules": None},
    "fusion": {"w_sem": 0.3, "aggregation": "mean_row_max", "normalize_lex": True,
               "strategy": "relative_threshold", "k": 5, "beta": 0.9},
    "scorer": {"external": None, "model": None, "dim": 2 ** 20, "learning_rate": 0.1, "epochs": 3},
    "selflabel": {"e1": 2, "e2": 10, "decision_threshold": 0.5, "rounds": 1},
    "eval": {"beta": 2.0},
    "paralaw": {"lang_a": "en", "lang_b": "ja", "ratio": [9, 1]},
}


def _merge(base: dict, over: dict) -> None:
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(base.get(k), dict):
            _merge(base[k], v)
        else:
            base[k] = v


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def set_key(cfg: dict, dotted: str, value) -> None:
    node = cfg
    parts = dotted.split(".")
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise DataError(f"config key {dotted!r} descends into a non-section")
    node[parts[-1]] = value


def load_config(path: str | Path | None = None, overrides: list[str] = (),
                env: dict | None = None) -> dict:
    """Defaults, then the JSON file, then ``key=value`` overrides, then the environment."""
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            tree = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise DataError(f"cannot read config {path}: {e}") from None
        if not isinstance(tree, dict):
            raise DataError(f"config {path} must be a JSON object")
        _merge(cfg, tree)
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise DataError(f"--set expects key=value, got {item!r}")
        set_key(cfg, key.strip(), _parse_value(value))
    env = os.environ if env is None else env
    if env.get("LEXENT_SCORER"):
        cfg["scorer"]["external"] = env["LEXENT_SCORER"]
    return cfg
