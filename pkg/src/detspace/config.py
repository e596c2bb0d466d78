"""Search run configuration files.

A run config is a single JSON object; unknown keys are rejected with their
field path so configs stay archivable and diffable.
"""

from __future__ import annotations

import json
from pathlib import Path

from .arch import BlockKind
from .pipeline import DEFAULT_STEP1_NECK_HEAD, SearchConfig
from .sampling import FlopRegime, SearchSpaceSpec


class ConfigError(ValueError):
    pass


_SCHEMA = {
    "seed": int,
    "count": int,
    "regime": {"target_gflops": (int, float), "band": (int, float)},
    "space": {
        "d_max": int, "w_max": int, "w_step": int, "n_max": int,
        "h_max": int, "m_max": int, "monotone_widths": bool, "block_kind": str,
    },
    "neck_head": {"n": int, "h": int, "m": int},
    "bootstrap": {"replicates": int, "subsample_frac": (int, float),
                  "confidence": (int, float)},
    "evaluator": dict,   # validated by make_evaluator
    "input_size": list,
    "output_dir": str,
    "threads": int,
}


def _check_keys(obj: dict, schema: dict, path: str = "") -> None:
    for key, value in obj.items():
        here = f"{path}.{key}" if path else key
        if key not in schema:
            raise ConfigError(f"unknown config key: {here}")
        expected = schema[key]
        if isinstance(expected, dict) and expected is not dict:
            if not isinstance(value, dict):
                raise ConfigError(f"{here} must be an object")
            _check_keys(value, expected, here)
        elif expected is dict:
            if not isinstance(value, dict):
                raise ConfigError(f"{here} must be an object")
        elif not isinstance(value, expected) or isinstance(value, bool) and expected is int:
            raise ConfigError(f"{here} has wrong type {type(value).__name__}")


def load_config(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError("config root must be a JSON object")
    _check_keys(obj, _SCHEMA)
    return obj


def search_config_from_dict(obj: dict) -> SearchConfig:
    regime_cfg = obj.get("regime", {})
    regime = FlopRegime(float(regime_cfg.get("target_gflops", 2.5)),
                        float(regime_cfg.get("band", 0.05)))
    space_cfg = dict(obj.get("space", {}))
    block_kind = space_cfg.pop("block_kind", None)
    try:
        space = SearchSpaceSpec(**space_cfg,
                                block_kind=BlockKind(block_kind) if block_kind else None)
    except ValueError as exc:
        raise ConfigError(f"space: {exc}") from exc
    nh = obj.get("neck_head")
    neck_head = ((nh["n"], nh["h"], nh["m"]) if nh else DEFAULT_STEP1_NECK_HEAD)
    boot = obj.get("bootstrap", {})
    input_size = tuple(obj.get("input_size", (640, 480)))
    if len(input_size) != 2:
        raise ConfigError("input_size must be [width, height]")
    try:
        return SearchConfig(
            seed=int(obj.get("seed", 0)),
            count=int(obj.get("count", 320)),
            regime=regime,
            space=space,
            neck_head=neck_head,
            replicates=int(boot.get("replicates", 1000)),
            subsample_frac=float(boot.get("subsample_frac", 0.25)),
            confidence=float(boot.get("confidence", 0.95)),
            input_size=input_size,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
