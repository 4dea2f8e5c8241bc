# utils/config.py
from __future__ import annotations

import os
from typing import Optional


# -----------------------------
# Settings resolution
# -----------------------------
def _get_secret(name: str) -> Optional[str]:
    """
    Resolve a setting from the environment first,
    then fall back to Streamlit secrets (secrets.toml) if available.
    """
    val = os.getenv(name)
    if val:
        return val
    try:
        import streamlit as st

        # st.secrets behaves like a Mapping when secrets.toml exists
        if hasattr(st, "secrets") and name in st.secrets:
            return str(st.secrets[name])  # type: ignore[index]
    except Exception:
        pass
    return None


def get_setting(name: str, default: Optional[str] = None) -> Optional[str]:
    """Return a setting value, or ``default`` when it is not configured."""
    val = _get_secret(name)
    return val if val is not None else default


def default_out_dir() -> str:
    return get_setting("SCATTERING_LAB_OUT", "runs") or "runs"


def default_threads() -> int:
    raw = get_setting("SCATTERING_LAB_THREADS", "1") or "1"
    try:
        return max(1, int(raw))
    except ValueError:
        raise RuntimeError(
            f"SCATTERING_LAB_THREADS must be an integer, got {raw!r}."
        )
