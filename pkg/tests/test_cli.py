import json

from utils.cli import EXIT_ASSERTION, EXIT_CONFIG, EXIT_OK, main


def _write(tmp_path, body):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(body) if not isinstance(body, str) else body)
    return str(path)


def _axioms(expect):
    return {
        "name": "axioms",
        "seed": 1,
        "pipeline": [{"op": "algebra_axioms", "params": {"instances": 2, "n": 2, "m": 4}, "expect": expect}],
    }


def test_list(capsys):
    assert main(["list"]) == EXIT_OK
    assert "free_decay" in capsys.readouterr().out


def test_validate_builtin():
    assert main(["validate", "kato_plumbing"]) == EXIT_OK


def test_bad_json_is_config_error(tmp_path):
    assert main(["run", _write(tmp_path, "{not json"), "--out", str(tmp_path / "out")]) == EXIT_CONFIG


def test_unknown_op_is_config_error(tmp_path):
    path = _write(tmp_path, {"name": "x", "pipeline": [{"op": "nope"}]})
    assert main(["validate", path]) == EXIT_CONFIG
    assert main(["run", path, "--out", str(tmp_path / "out")]) == EXIT_CONFIG


def test_empty_pipeline_writes_nothing(tmp_path):
    out = tmp_path / "out"
    assert main(["run", _write(tmp_path, {"name": "empty"}), "--out", str(out)]) == EXIT_OK
    assert not out.exists()


def test_run_writes_artifacts(tmp_path):
    out = tmp_path / "out"
    path = _write(tmp_path, _axioms({"max_associativity": {"max": 1e-10}}))
    assert main(["run", path, "--out", str(out)]) == EXIT_OK
    report = json.loads((out / "axioms" / "report.json").read_text())
    assert report["status"] == "passed"
    assert report["seed"] == 1
    assert (out / "axioms" / "algebra_axioms.csv").exists()
    assert "algebra_axioms.csv" in report["files"]


def test_failed_assertion_exit_code(tmp_path):
    out = tmp_path / "out"
    path = _write(tmp_path, _axioms({"max_associativity": {"max": -1.0}}))
    assert main(["run", path, "--out", str(out), "--seed", "4"]) == EXIT_ASSERTION
    report = json.loads((out / "axioms" / "report.json").read_text())
    assert report["status"] == "failed"
    assert report["seed"] == 4


def test_show(tmp_path, capsys):
    out = tmp_path / "out"
    main(["run", _write(tmp_path, _axioms({})), "--out", str(out)])
    capsys.readouterr()
    assert main(["show", str(out / "axioms")]) == EXIT_OK
    assert '"scenario": "axioms"' in capsys.readouterr().out
    assert main(["show", str(tmp_path / "nowhere")]) == EXIT_CONFIG
