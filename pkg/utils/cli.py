# utils/cli.py
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from pydantic import ValidationError

from utils.config import default_out_dir
from utils.errors import LabError, ScenarioError
from utils.logging_config import configure_logging, get_logger
from utils.reports import write_plot_script, write_report, write_table
from utils.scenarios import RNG_NAME, Scenario, StepOutcome, execute, list_scenarios, load_scenario

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_NUMERIC = 2
EXIT_CONFIG = 3


# -----------------------------
# Artifacts
# -----------------------------
def _report(scenario: Scenario, seed: int, outcomes: List[StepOutcome], files: List[str]) -> Dict[str, Any]:
    passed = all(a.passed for o in outcomes for a in o.assertions)
    return {
        "scenario": scenario.name,
        "description": scenario.description,
        "seed": seed,
        "rng": RNG_NAME,
        "status": "passed" if passed else "failed",
        "steps": [
            {
                "step": o.step,
                "op": o.op,
                "metrics": o.result.metrics,
                "fits": o.result.fits,
                "assertions": [
                    {"metric": a.metric, "expected": a.expected, "actual": a.actual, "passed": a.passed} for a in o.assertions
                ],
                "warnings": o.result.warnings,
            }
            for o in outcomes
        ],
        "files": files,
    }


def write_artifacts(scenario: Scenario, seed: int, outcomes: List[StepOutcome], out_dir: Path) -> Path:
    """<out>/<scenario>/<table>.csv, <fit>.gp and report.json."""
    run_dir = out_dir / scenario.name
    used: set = set()
    files: List[str] = []
    for o in outcomes:
        names = {}
        for table, df in o.result.tables.items():
            stem = table if table not in used else f"{o.step}__{table}"
            used.add(stem)
            names[table] = stem
            write_table(run_dir / f"{stem}.csv", df)
            files.append(f"{stem}.csv")
        for table, fit in o.result.fits.items():
            if table not in names:
                continue
            df = o.result.tables[table]
            stem = names[table]
            write_plot_script(run_dir / f"{stem}.gp", f"{stem}.csv", df, fit["x"], fit["y"], f"{scenario.name}: {stem}", fit)
            files.append(f"{stem}.gp")
    write_report(run_dir / "report.json", _report(scenario, seed, outcomes, files))
    return run_dir


# -----------------------------
# Commands
# -----------------------------
def cmd_run(args: argparse.Namespace) -> int:
    if args.threads:
        os.environ["SCATTERING_LAB_THREADS"] = str(args.threads)
    scenario = load_scenario(args.scenario)
    seed = scenario.seed if args.seed is None else args.seed
    outcomes = execute(scenario, seed)
    if not scenario.pipeline:
        print(f"{scenario.name}: empty pipeline, nothing to do")
        return EXIT_OK
    out_dir = Path(args.out or scenario.out or default_out_dir())
    run_dir = write_artifacts(scenario, seed, outcomes, out_dir)
    failed = [a for o in outcomes for a in o.assertions if not a.passed]
    for o in outcomes:
        for a in o.assertions:
            mark = "ok  " if a.passed else "FAIL"
            print(f"[{mark}] {a.step}.{a.metric} = {a.actual!r} (expected {a.expected})")
    print(f"artifacts: {run_dir}")
    return EXIT_ASSERTION if failed else EXIT_OK


def cmd_list(args: argparse.Namespace) -> int:
    catalog = list_scenarios()
    width = int(catalog["name"].str.len().max())
    for row in catalog.itertuples(index=False):
        print(f"{row.name:<{width}}  {row.runtime:<9}  {row.description}")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    print(f"{scenario.name}: {len(scenario.pipeline)} step(s) OK")
    return EXIT_OK


def cmd_show(args: argparse.Namespace) -> int:
    path = Path(args.run_dir) / "report.json"
    if not path.exists():
        raise ScenarioError(f"no report.json in {args.run_dir}")
    print(json.dumps(json.loads(path.read_text(encoding="utf-8")), indent=2, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lab", description="Scattering lab scenario runner")
    parser.add_argument("--log-level", default=None, help="Logging level (default from SCATTERING_LAB_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run a scenario file or built-in scenario name")
    run.add_argument("scenario")
    run.add_argument("--out", default=None, help="Output directory (default from SCATTERING_LAB_OUT)")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--threads", type=int, default=None)
    run.set_defaults(func=cmd_run)

    lst = sub.add_parser("list", help="List built-in scenarios")
    lst.set_defaults(func=cmd_list)

    val = sub.add_parser("validate", help="Parse and check a scenario without running it")
    val.add_argument("scenario")
    val.set_defaults(func=cmd_validate)

    show = sub.add_parser("show", help="Print the report of a run directory")
    show.add_argument("run_dir")
    show.set_defaults(func=cmd_show)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        return args.func(args)
    except (ScenarioError, ValidationError, json.JSONDecodeError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (LabError, ValueError, ArithmeticError) as e:
        print(f"numeric error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERIC
