# utils/reports.py
from __future__ import annotations

import io
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import numpy as np
import pandas as pd

from utils.logging_config import get_logger

logger = get_logger(__name__)

FLOAT_FORMAT = "%.12g"
PathLike = Union[str, Path]


# -----------------------------
# Atomic writes
# -----------------------------
def write_atomic(path: PathLike, data: Union[str, bytes]) -> Path:
    """
    Write to a temporary file next to ``path`` and rename it into place,
    so readers never see a partial file.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": ""})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _json_default(obj: Any) -> Any:
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def to_json(report: Mapping[str, Any]) -> str:
    return json.dumps(report, indent=2, sort_keys=True, default=_json_default) + "\n"


def write_table(path: PathLike, df: pd.DataFrame) -> Path:
    """CSV with fixed float formatting and no index."""
    frame = df.copy()
    for col in frame.columns:
        if np.iscomplexobj(frame[col].to_numpy()):
            vals = frame.pop(col).to_numpy()
            frame[f"{col}_re"] = vals.real
            frame[f"{col}_im"] = vals.imag
    return write_atomic(path, frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n"))


def write_report(path: PathLike, report: Mapping[str, Any]) -> Path:
    return write_atomic(path, to_json(report))


# -----------------------------
# Plot scripts
# -----------------------------
def gnuplot_script(
    csv_name: str,
    x: str,
    y: str,
    columns: list,
    title: str,
    exponent: Optional[float] = None,
    prefactor: Optional[float] = None,
) -> str:
    """Self-contained log-log gnuplot script reading ``csv_name`` from its own directory."""
    xi, yi = columns.index(x) + 1, columns.index(y) + 1
    lines = [
        f"# {title}",
        "set datafile separator ','",
        "set logscale xy",
        f"set xlabel '{x}'",
        f"set ylabel '{y}'",
        f"set title '{title}'",
        "set key top right",
    ]
    plot = f"plot '{csv_name}' every ::1 using {xi}:{yi} with points pt 7 title '{y}'"
    if exponent is not None and prefactor is not None:
        lines.append(f"fit_line(t) = {prefactor:.12g} * t**(-({exponent:.12g}))")
        plot += f", fit_line(x) with lines title 'fit t^-{exponent:.3f}'"
    lines.append(plot)
    return "\n".join(lines) + "\n"


def write_plot_script(path: PathLike, csv_name: str, df: pd.DataFrame, x: str, y: str, title: str, fit: Optional[Mapping[str, float]] = None) -> Path:
    fit = fit or {}
    return write_atomic(
        path,
        gnuplot_script(csv_name, x, y, list(df.columns), title, fit.get("exponent"), fit.get("prefactor")),
    )


# -----------------------------
# Run directories
# -----------------------------
def load_run(run_dir: PathLike) -> Dict[str, Any]:
    """
    Load a run directory written by the CLI.

    Returns:
        {"report": dict or None, "tables": {stem: DataFrame}, "scripts": {stem: str}}
    """
    run_dir = Path(run_dir)
    if not run_dir.is_dir():
        raise FileNotFoundError(f"run directory not found: {run_dir}")
    report_path = run_dir / "report.json"
    report = json.loads(report_path.read_text(encoding="utf-8")) if report_path.exists() else None
    tables = {p.stem: pd.read_csv(p) for p in sorted(run_dir.glob("*.csv"))}
    scripts = {p.stem: p.read_text(encoding="utf-8") for p in sorted(run_dir.glob("*.gp"))}
    return {"report": report, "tables": tables, "scripts": scripts}


def excel_workbook(tables: Mapping[str, pd.DataFrame]) -> bytes:
    """One sheet per table; sheet names are cut to Excel's 31 characters."""
    buf = io.BytesIO()
    with pd.ExcelWriter(buf, engine="openpyxl") as writer:
        for name, df in tables.items():
            df.to_excel(writer, index=False, sheet_name=name[:31] or "table")
    return buf.getvalue()
