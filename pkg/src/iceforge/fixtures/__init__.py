"""Bundled fixture: a fourteen-tool security bundle with an offline registry and git store."""

from __future__ import annotations

from importlib import resources
from pathlib import Path


def blackice() -> Path:
    """Directory holding manifest.toml, registry/, gitstore/, patches/ and cli_scripts/."""
    return Path(str(resources.files(__package__) / "blackice"))
