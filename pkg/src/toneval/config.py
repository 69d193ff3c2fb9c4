"""Configuration loading and management for toneval."""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib  # type: ignore[import-not-found]

from toneval.paths import get_global_config_path, get_project_config_path

INPUT_FORMATS = ("lines", "keyed-tsv")
OUTPUT_FORMATS = ("json", "tsv", "pretty")


class ConfigError(Exception):
    """Configuration is unreadable or invalid."""

    pass


@dataclass
class EvalConfig:
    """Defaults for `toneval eval`; command-line flags override every field."""

    lang: str = "uneme"
    input_format: str = "lines"
    format: str = "tsv"
    indel_cost: float = 1.0
    strict: bool = False
    lexicon: Path | None = None
    per_utterance: bool = False
    min_support: int = 5
    workers: int = 1
    color: bool | None = None  # None means auto-detect


@dataclass
class ProfilesConfig:
    """Where named profiles are looked up besides the bundled ones."""

    paths: list[Path] = field(default_factory=list)


@dataclass
class Config:
    """Full toneval configuration."""

    eval: EvalConfig = field(default_factory=EvalConfig)
    profiles: ProfilesConfig = field(default_factory=ProfilesConfig)

    # Source tracking for debugging
    _config_sources: list[Path] = field(default_factory=list)


def _expand_path(path: str | Path) -> Path:
    """Expand ~ and environment variables in path."""
    return Path(os.path.expanduser(os.path.expandvars(str(path))))


def _deep_merge(base: dict[str, Any], override: dict[str, Any]) -> dict[str, Any]:
    """Deep merge two dicts, with override taking precedence."""
    result = base.copy()
    for key, value in override.items():
        if key in result and isinstance(result[key], dict) and isinstance(value, dict):
            result[key] = _deep_merge(result[key], value)
        else:
            # Lists and scalars are replaced wholesale
            result[key] = value
    return result


def parse_config(data: dict[str, Any]) -> Config:
    """Parse configuration dictionary into Config object."""
    eval_data = data.get("eval", {})
    defaults = EvalConfig()
    lexicon = eval_data.get("lexicon")
    color = eval_data.get("color", defaults.color)
    if isinstance(color, str):
        # "auto" is accepted as an explicit spelling of the default
        color = None if color == "auto" else color.lower() in ("true", "yes", "always")

    try:
        eval_config = EvalConfig(
            lang=str(eval_data.get("lang", defaults.lang)),
            input_format=str(eval_data.get("input_format", defaults.input_format)),
            format=str(eval_data.get("format", defaults.format)),
            indel_cost=float(eval_data.get("indel_cost", defaults.indel_cost)),
            strict=bool(eval_data.get("strict", defaults.strict)),
            lexicon=_expand_path(lexicon) if lexicon else None,
            per_utterance=bool(eval_data.get("per_utterance", defaults.per_utterance)),
            min_support=int(eval_data.get("min_support", defaults.min_support)),
            workers=int(eval_data.get("workers", defaults.workers)),
            color=color,
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid [eval] value: {e}") from e

    profiles_data = data.get("profiles", {})
    profiles = ProfilesConfig(
        paths=[_expand_path(p) for p in profiles_data.get("paths", [])],
    )

    return Config(eval=eval_config, profiles=profiles)


def _load_toml_file(path: Path) -> dict[str, Any]:
    """Load a TOML file, returning empty dict if not found."""
    if not path.exists():
        return {}
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"Invalid TOML in {path}: {e}") from e


def load_config(path: Path | None = None, cwd: Path | None = None) -> Config:
    """Load configuration with hierarchy: global → project.

    Args:
        path: Explicit config path (overrides auto-detection)
        cwd: Directory searched for the project config (default: current)

    Config loading order (later overrides earlier):
    1. Global config ($XDG_CONFIG_HOME/toneval/config.toml or ~/.config/toneval/config.toml)
    2. Project config (./.toneval.toml)
    """
    sources: list[Path] = []

    # If explicit path provided, use only that
    if path:
        if not path.exists():
            raise ConfigError(f"Config file not found: {path}")
        config = parse_config(_load_toml_file(path))
        config._config_sources = [path]
        return config

    merged_data: dict[str, Any] = {}
    for candidate in (get_global_config_path(), get_project_config_path(cwd)):
        if candidate.exists():
            merged_data = _deep_merge(merged_data, _load_toml_file(candidate))
            sources.append(candidate)

    config = parse_config(merged_data)
    config._config_sources = sources
    return config


def generate_example_config() -> str:
    """Generate example configuration file content."""
    return """# toneval project configuration
# Flags given on the command line always take precedence.

[eval]
lang = "uneme"              # builtin (uneme, yoruba, english), profile name, or path to a .toml profile
input_format = "lines"      # "lines" (line i of ref pairs with line i of hyp) or "keyed-tsv" (id<TAB>text)
format = "tsv"              # "json", "tsv" or "pretty"
indel_cost = 1.0            # insertion/deletion cost of the feature alignment
strict = false              # fail on characters outside the profile inventory
per_utterance = false       # include one row/entry per utterance
min_support = 5             # minimum reference support for the corpus worst feature
workers = 1
# lexicon = "~/data/english.lex"   # word<TAB>ARPABET tokens, for orthographic English input
# color = "auto"

[profiles]
# Extra directories searched for <name>.toml language profiles
# paths = ["~/code/my-profiles"]
"""
