from pathlib import Path

import pandas as pd
import streamlit as st

from utils.cli import write_artifacts
from utils.config import default_out_dir
from utils.errors import LabError, ScenarioError
from utils.scenarios import builtin, execute, list_scenarios
from utils.shared_components import apply_lab_styling, render_lab_header

st.set_page_config(page_title="Scenarios", page_icon="🧪", layout="wide")

apply_lab_styling()
render_lab_header("Scenarios")

catalog = list_scenarios()
name = st.selectbox("Scenario", catalog["name"].tolist())
row = catalog[catalog["name"] == name].iloc[0]
st.caption(f"{row['description']} (expected runtime {row['runtime']})")

scenario = builtin(name)
with st.expander("Pipeline"):
    st.json(scenario.model_dump(exclude_none=True))

c1, c2 = st.columns(2)
with c1:
    seed = st.number_input("Seed", value=int(scenario.seed), step=1)
with c2:
    out_dir = st.text_input("Output directory", value=default_out_dir())

if st.button("Run scenario"):
    try:
        with st.spinner(f"Running {name}..."):
            outcomes = execute(scenario, int(seed))
    except ScenarioError as e:
        st.error(f"Configuration error: {e}")
        st.stop()
    except (LabError, ValueError) as e:
        st.error(f"Numerical error: {type(e).__name__}: {e}")
        st.stop()

    if scenario.pipeline:
        run_dir = write_artifacts(scenario, int(seed), outcomes, Path(out_dir))
        st.session_state["last_run"] = run_dir.name
        st.success(f"Artifacts written to {run_dir}")

    rows = [
        {"step": a.step, "metric": a.metric, "actual": a.actual, "expected": str(a.expected), "passed": a.passed}
        for o in outcomes
        for a in o.assertions
    ]
    if rows:
        df = pd.DataFrame(rows)
        failed = int((~df["passed"]).sum())
        st.metric("Assertions passed", f"{len(df) - failed} / {len(df)}")
        st.dataframe(df, use_container_width=True, hide_index=True)
    for o in outcomes:
        for w in o.result.warnings:
            st.warning(f"{o.step}: {w}")
