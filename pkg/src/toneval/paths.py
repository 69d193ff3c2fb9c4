"""XDG-compliant path management for toneval.

Respects XDG Base Directory Specification:
- XDG_CONFIG_HOME: Config files and user profiles (default: ~/.config)

Also supports TONEVAL_CONFIG_DIR for full override.
"""

from __future__ import annotations

import os
from pathlib import Path

PROJECT_CONFIG_NAME = ".toneval.toml"


def get_config_dir() -> Path:
    """Get the toneval config directory.

    Priority:
    1. TONEVAL_CONFIG_DIR env var (full override)
    2. XDG_CONFIG_HOME/toneval
    3. ~/.config/toneval (default)
    """
    if override := os.environ.get("TONEVAL_CONFIG_DIR"):
        return Path(override).expanduser()

    xdg_config = os.environ.get("XDG_CONFIG_HOME")
    if xdg_config:
        return Path(xdg_config) / "toneval"

    return Path.home() / ".config" / "toneval"


def get_global_config_path() -> Path:
    """Get the global config file path."""
    return get_config_dir() / "config.toml"


def get_user_profiles_dir() -> Path:
    """Directory searched for user-supplied `<name>.toml` language profiles."""
    return get_config_dir() / "profiles"


def get_project_config_path(start: Path | None = None) -> Path:
    """Project config lives next to the data being evaluated (the cwd)."""
    return (start or Path.cwd()) / PROJECT_CONFIG_NAME


def ensure_config_dir() -> Path:
    """Ensure config directory exists and return path."""
    config_dir = get_config_dir()
    config_dir.mkdir(parents=True, exist_ok=True)
    return config_dir
