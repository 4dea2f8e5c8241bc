import streamlit as st

from utils.scenarios import list_scenarios
from utils.shared_components import apply_lab_styling, list_run_dirs, render_lab_header

st.set_page_config(page_title="Scattering Lab Overview", page_icon="🔬", layout="wide")

apply_lab_styling()
render_lab_header("Scattering Lab Overview")

# ---- Page content ----
st.markdown("""
### Welcome to the Scattering Lab

A desk-scale laboratory for two-body Schrödinger scattering: wave operators, Born series,
Birman–Schwinger inversion, Wiener-algebra inversion, restriction estimates and dispersive decay.
Use the navigation menu to access the different sections:

- **Scenarios**: run a built-in scenario and check its assertions
- **Fits**: log–log plots of every power-law fit in a run
- **Export**: download tables, reports and an Excel workbook

The same scenarios run from the command line with `python lab.py run <name>`.
""")

c1, c2 = st.columns(2)
with c1:
    st.metric("Built-in scenarios", len(list_scenarios()))
with c2:
    st.metric("Runs on disk", len(list_run_dirs()))

st.subheader("Catalog")
st.dataframe(list_scenarios(), use_container_width=True, hide_index=True)
