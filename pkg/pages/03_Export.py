import pandas as pd
import streamlit as st

from utils.reports import excel_workbook, load_run, to_json
from utils.shared_components import apply_lab_styling, render_lab_header, select_run_dir

st.set_page_config(page_title="Export", page_icon="📤", layout="wide")

apply_lab_styling()
render_lab_header("Export & Reports")

run_dir = select_run_dir()
if run_dir is None:
    st.stop()

run = load_run(run_dir)
stamp = pd.Timestamp.now().strftime("%Y%m%d_%H%M%S")

# -------------------------------------------
# Tables
# -------------------------------------------
for name, df in run["tables"].items():
    st.markdown(f"### {name}")
    st.dataframe(df, use_container_width=True, hide_index=True)
    st.download_button(
        f"Download {name}.csv",
        df.to_csv(index=False, float_format="%.12g"),
        file_name=f"{run_dir.name}_{name}.csv",
        mime="text/csv",
        key=f"csv_{name}",
    )

# -------------------------------------------
# Report and workbook
# -------------------------------------------
c1, c2 = st.columns(2)
with c1:
    if run["report"] is not None:
        st.download_button(
            "Download report.json",
            to_json(run["report"]),
            file_name=f"{run_dir.name}_report_{stamp}.json",
            mime="application/json",
        )
with c2:
    if run["tables"]:
        st.download_button(
            "Download Excel",
            excel_workbook(run["tables"]),
            file_name=f"{run_dir.name}_{stamp}.xlsx",
            mime="application/vnd.openxmlformats-officedocument.spreadsheetml.sheet",
        )

for name, script in run["scripts"].items():
    with st.expander(f"{name}.gp"):
        st.code(script, language="gnuplot")
