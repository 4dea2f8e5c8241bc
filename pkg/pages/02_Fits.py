import streamlit as st

from utils.reports import load_run
from utils.shared_components import apply_lab_styling, assertions_frame, fit_figure, render_lab_header, select_run_dir

st.set_page_config(page_title="Fits", page_icon="📈", layout="wide")

apply_lab_styling()
render_lab_header("Fits")

run_dir = select_run_dir()
if run_dir is None:
    st.stop()

run = load_run(run_dir)
report = run["report"] or {}
st.subheader(f"Run: {report.get('scenario', run_dir.name)} (seed {report.get('seed')})")

checks = assertions_frame(report)
if not checks.empty:
    st.dataframe(checks, use_container_width=True, hide_index=True)

shown = 0
for step in report.get("steps", []):
    for table, fit in step.get("fits", {}).items():
        df = run["tables"].get(f"{step['step']}__{table}", run["tables"].get(table))
        if df is None or fit.get("x") not in df or fit.get("y") not in df:
            continue
        data = df[(df[fit["x"]] > 0) & (df[fit["y"]] > 0)]
        st.plotly_chart(
            fit_figure(data, fit["x"], fit["y"], f"{step['step']}: {table}", fit.get("exponent"), fit.get("prefactor")),
            use_container_width=True,
        )
        shown += 1

if not shown:
    st.info("This run has no power-law fits.")
