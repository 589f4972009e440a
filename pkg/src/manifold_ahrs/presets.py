"""Named scenario presets shipped as config files.

The preset directory can be overridden with the ``MANIFOLD_AHRS_PRESETS``
environment variable; presets are plain scenario YAML files, not code.
"""

from __future__ import annotations

import os
from pathlib import Path

_ENV_VAR = "MANIFOLD_AHRS_PRESETS"


def preset_dir() -> Path:
    """Directory holding preset scenario files."""
    override = os.environ.get(_ENV_VAR)
    if override:
        return Path(override)
    return Path(__file__).parent / "presets"


def available_presets() -> list[str]:
    """Names of the shipped (or overridden) presets."""
    directory = preset_dir()
    if not directory.is_dir():
        return []
    return sorted(p.stem for p in directory.glob("*.yaml"))


def resolve_config_arg(arg: str | Path) -> Path:
    """Resolve a --config argument: an existing file path or a preset name."""
    path = Path(arg)
    if path.is_file():
        return path
    candidate = preset_dir() / f"{arg}.yaml"
    if candidate.is_file():
        return candidate
    names = ", ".join(available_presets()) or "(none found)"
    raise FileNotFoundError(
        f"no config file or preset named {str(arg)!r}; available presets: {names}"
    )
