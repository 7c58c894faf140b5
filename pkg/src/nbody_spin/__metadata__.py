"""Project metadata read from the installed distribution."""

from __future__ import annotations

import importlib.metadata

__all__ = ("__project__", "__version__")

__version__ = importlib.metadata.version("nbody-spin")
"""Installed version of ``nbody-spin``."""
__project__ = importlib.metadata.metadata("nbody-spin")["Name"]
"""Distribution name as recorded in the package metadata."""
