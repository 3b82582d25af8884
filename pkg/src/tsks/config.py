"""
INI-style experiment configuration.

::

    [experiment]
    environment = gaussian
    horizon = 10000
    replications = 50
    policies = TS, dTS, TS-CD, TS-KS

    [calibration]
    p_false_alarm = 0.001
    sigma = 0.5

    [environment]
    change_rate = 0.00333

Keys under ``[environment]`` become ``env_params``. Values are parsed as
Python literals where possible and kept as strings otherwise. A run
manifest (JSON) is accepted wherever a config file is.
"""
from __future__ import annotations

import ast
import configparser
import json
from dataclasses import fields
from pathlib import Path
from typing import Any, Mapping

from .harness import ExperimentConfig

SECTIONS = ("experiment", "calibration", "environment")
CALIBRATION_KEYS = ("p_false_alarm", "p_missed", "p_loc", "p_change", "delta_min", "delta_max",
                    "delta_mu", "sigma", "epsilon_b", "estimate_accuracy", "warmup_rule",
                    "discount")


class ConfigError(ValueError):
    pass


def parse_value(text: str) -> Any:
    text = text.strip()
    if text.lower() in ("none", ""):
        return None
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def _config_keys() -> set[str]:
    return {f.name for f in fields(ExperimentConfig)}


def read_config(path) -> dict[str, Any]:
    """Return ``ExperimentConfig`` keyword arguments from an INI file or manifest."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"{path}: no such config file")
    if path.suffix == ".json":
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return dict(data.get("config", data))

    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keep key case
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    known = _config_keys()
    out: dict[str, Any] = {}
    env_params: dict[str, Any] = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, raw in parser.items(section):
            value = parse_value(raw)
            if section == "environment":
                env_params[key] = value
                continue
            if key not in known or key == "env_params":
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
            if key == "policies" and isinstance(value, str):
                value = tuple(p.strip() for p in value.split(",") if p.strip())
            out[key] = value
    if env_params:
        out["env_params"] = env_params
    return out


def write_config(config: ExperimentConfig, path) -> None:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    d = config.to_dict()
    parser["experiment"] = {}
    parser["calibration"] = {}
    parser["environment"] = {k: repr(v) for k, v in d.pop("env_params").items()}
    for key, value in d.items():
        section = "calibration" if key in CALIBRATION_KEYS else "experiment"
        if key == "policies":
            parser[section][key] = ", ".join(value)
        else:
            parser[section][key] = repr(value) if isinstance(value, str) else str(value)
    with Path(path).open("w") as fh:
        parser.write(fh)


def merge(base: Mapping[str, Any], overrides: Mapping[str, Any]) -> dict[str, Any]:
    """Layer overrides on top of base; ``env_params`` merge key by key."""
    out = dict(base)
    for key, value in overrides.items():
        if key == "env_params":
            merged = dict(out.get("env_params") or {})
            merged.update(value)
            out[key] = merged
        else:
            out[key] = value
    return out
