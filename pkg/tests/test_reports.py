import json

import numpy as np
import pandas as pd

from utils.reports import excel_workbook, gnuplot_script, load_run, to_json, write_report, write_table


def test_write_table_splits_complex(tmp_path):
    df = pd.DataFrame({"lam": [0.5, 1.0], "m": np.array([1 + 2j, 3 - 4j])})
    write_table(tmp_path / "t.csv", df)
    back = pd.read_csv(tmp_path / "t.csv")
    assert list(back.columns) == ["lam", "m_re", "m_im"]
    assert back["m_im"].tolist() == [2.0, -4.0]


def test_to_json_handles_numpy():
    text = to_json({"a": np.float64(1.5), "b": np.int64(2), "c": complex(1, -1), "d": np.arange(3)})
    data = json.loads(text)
    assert data == {"a": 1.5, "b": 2, "c": {"re": 1.0, "im": -1.0}, "d": [0, 1, 2]}


def test_load_run(tmp_path):
    write_table(tmp_path / "decay.csv", pd.DataFrame({"t": [1.0, 2.0], "sup": [1.0, 0.35]}))
    write_report(tmp_path / "report.json", {"scenario": "x", "steps": []})
    (tmp_path / "decay.gp").write_text("plot 'decay.csv'\n")
    run = load_run(tmp_path)
    assert run["report"]["scenario"] == "x"
    assert set(run["tables"]) == {"decay"}
    assert "decay" in run["scripts"]


def test_gnuplot_script_mentions_csv():
    df = pd.DataFrame({"t": [1.0, 2.0], "sup": [1.0, 0.35]})
    script = gnuplot_script("decay.csv", "t", "sup", list(df.columns), "decay", 1.5, 1.0)
    assert "decay.csv" in script
    assert "logscale" in script


def test_excel_workbook_is_xlsx():
    data = excel_workbook({"a" * 40: pd.DataFrame({"x": [1, 2]})})
    assert data[:2] == b"PK"


def test_gnuplot_column_indices():
    script = gnuplot_script("decay.csv", "t", "sup", ["exponent", "t", "sup"], "decay")
    assert "using 2:3" in script
    assert "fit_line" not in script
