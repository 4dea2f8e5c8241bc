# utils/shared_components.py
from __future__ import annotations

from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd
import plotly.graph_objects as go
import streamlit as st

from utils.config import default_out_dir

NAVY = "#002664"


def apply_lab_styling() -> None:
    """Apply consistent styling across all pages."""
    st.markdown(
        f"""
<style>
.stApp {{ background-color: #f8f9fa; }}
.lab-header {{
  background-color: {NAVY};
  color: white;
  padding: 0.75rem 2rem;
  margin: -2rem -2rem 1.5rem -2rem;
  box-shadow: 0 2px 8px rgba(0,0,0,0.1);
}}
h1, h2, h3 {{ color: {NAVY} !important; }}
.stButton > button {{ background-color: {NAVY}; color: white; }}
[data-testid="metric-container"] {{ background: white; border: 1px solid #e0e0e0; border-radius: 8px; }}
</style>
""",
        unsafe_allow_html=True,
    )


def render_lab_header(title: str = "Scattering Lab") -> None:
    st.markdown(
        f'<div class="lab-header"><h1 style="color: white; margin: 0; font-size: 1.4rem; font-weight: 600;">{title}</h1></div>',
        unsafe_allow_html=True,
    )


def list_run_dirs(out_dir: Optional[str] = None) -> List[Path]:
    """Run directories (those holding a report.json) below the output directory."""
    root = Path(out_dir or default_out_dir())
    if not root.is_dir():
        return []
    return sorted(p.parent for p in root.glob("*/report.json"))


def select_run_dir(label: str = "Run") -> Optional[Path]:
    """Sidebar selector for a run directory; None when there are no runs yet."""
    out_dir = st.sidebar.text_input("Output directory", value=default_out_dir())
    runs = list_run_dirs(out_dir)
    if not runs:
        st.info(f"No runs found under {out_dir}. Run a scenario first.")
        return None
    names = [p.name for p in runs]
    default = st.session_state.get("last_run")
    index = names.index(default) if default in names else 0
    choice = st.sidebar.selectbox(label, names, index=index)
    return runs[names.index(choice)]


def fit_figure(df: pd.DataFrame, x: str, y: str, title: str, exponent: Optional[float] = None, prefactor: Optional[float] = None) -> go.Figure:
    """Log-log scatter of df[y] against df[x] with an optional power-law line."""
    fig = go.Figure()
    fig.add_trace(go.Scatter(x=df[x], y=df[y], mode="markers", name=y, marker=dict(color=NAVY)))
    if exponent is not None and prefactor is not None:
        xs = np.geomspace(float(df[x].min()), float(df[x].max()), 100)
        fig.add_trace(go.Scatter(x=xs, y=prefactor * xs ** (-exponent), mode="lines", name=f"fit t^-{exponent:.3f}"))
    fig.update_layout(title=title, xaxis_type="log", yaxis_type="log", xaxis_title=x, yaxis_title=y, height=420)
    return fig


def assertions_frame(report: dict) -> pd.DataFrame:
    rows = []
    for step in report.get("steps", []):
        for a in step.get("assertions", []):
            rows.append({"step": step["step"], "metric": a["metric"], "actual": a["actual"], "expected": str(a["expected"]), "passed": a["passed"]})
    return pd.DataFrame(rows)
