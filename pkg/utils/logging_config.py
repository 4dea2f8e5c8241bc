# utils/logging_config.py
from __future__ import annotations

import logging
from typing import Optional

from utils.config import get_setting

_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
_configured = False


def configure_logging(level: Optional[str] = None) -> None:
    """
    Install a single stream handler on the ``utils`` logger tree.

    Args:
        level: Logging level name. Falls back to SCATTERING_LAB_LOG_LEVEL,
            then WARNING.
    """
    global _configured
    name = (level or get_setting("SCATTERING_LAB_LOG_LEVEL", "WARNING")).upper()
    root = logging.getLogger("utils")
    if not _configured:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(_FORMAT))
        root.addHandler(handler)
        root.propagate = False
        _configured = True
    root.setLevel(getattr(logging, name, logging.WARNING))


def get_logger(name: str) -> logging.Logger:
    """Return a module logger below the ``utils`` tree."""
    return logging.getLogger(name)
