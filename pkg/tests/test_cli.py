"""Command-line interface: reports, exit codes, determinism and export."""

import csv
import json
import subprocess
import sys

import pytest

from lightcone import __version__
from lightcone.cli import PROPERTIES, main

FAST = ["--pairs", "2000", "--chords", "2000", "--dual-samples", "20000", "--points", "4",
        "--deterministic"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def report(capsys, *argv):
    code, out, err = run(capsys, *argv)
    return code, json.loads(out), err


def test_analyze_minkowski(capsys):
    code, rep, _ = report(capsys, "analyze", "minkowski2", *FAST)
    assert code == 0 and rep["passed"] and rep["first_failure"] is None
    assert set(rep["checks"]) == {"validity", *PROPERTIES}
    assert rep["checks"]["cones"]["counts"]["TIMELIKE_REGION"] == 2
    assert rep["spec"]["text"] == "0.5*(-v0^2+v1^2+v2^2)"
    assert "generated" not in rep and rep["version"] == __version__


@pytest.mark.parametrize("prop", ["cones", "convexity", "cs", "legendre", "borsuk"])
def test_single_property_on_the_non_reversible_entry(capsys, prop):
    code, rep, _ = report(capsys, "check", "odd_perturbed", "--property", prop, *FAST)
    assert code == 0 and set(rep["checks"]) == {"validity", prop}


def test_randers_is_rejected_with_a_domain_witness(capsys):
    code, rep, err = report(capsys, "analyze", "randers4", *FAST)
    assert code == 1 and rep["first_failure"] == "validity"
    assert rep["checks"]["validity"]["verdict"] == "DOMAIN_WITNESS"
    assert rep["checks"]["legendre"]["verdict"] == "NOT_APPLICABLE"
    assert "DOMAIN_WITNESS" in err


def test_hopf_field_is_not_finsler(capsys):
    code, rep, _ = report(capsys, "check", "hopf4", "--property", "euler", *FAST)
    assert code == 1
    euler = rep["checks"]["euler"]
    assert euler["verdict"] == "NON_FINSLER" and euler["min_residual_contracted_index"] > 0.1
    assert rep["checks"]["validity"]["quadratic_equals_norm2"] < 1e-12


def test_expression_input(capsys):
    code, rep, _ = report(capsys, "check", "--expr", "0.5*(-v0^2+v1^2)", "--dim", "2",
                          "--property", "cones", *FAST)
    assert code == 0 and rep["checks"]["cones"]["counts"]["TIMELIKE_REGION"] == 2


def test_parameters_override_defaults(capsys):
    code, rep, _ = report(capsys, "check", "beem3", "--alpha", "10", "--property", "cones", *FAST)
    assert code == 1 and rep["checks"]["validity"]["verdict"] != "VALID_LORENTZ_FINSLER"
    assert rep["spec"]["parameters"] == {"alpha": 10.0}


def test_deterministic_reports_are_byte_identical(capsys, tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"r{k}.json"
        assert main(["check", "beem3", "--property", "all", *FAST, "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_seed_from_the_environment(capsys, monkeypatch):
    monkeypatch.setenv("LIGHTCONE_SEED", "7")
    _, rep, _ = report(capsys, "check", "minkowski2", "--property", "cones", *FAST)
    assert rep["seed"] == 7
    _, rep, _ = report(capsys, "check", "minkowski2", "--property", "cones", "--seed", "3", *FAST)
    assert rep["seed"] == 3


def test_timestamp_without_deterministic(capsys):
    code, out, _ = run(capsys, "check", "minkowski2", "--property", "cones")
    assert code == 0 and "generated" in json.loads(out)


@pytest.mark.parametrize("argv, message", [
    (["analyze", "kerr"], "unknown catalogue entry"),
    (["analyze", "--expr", "v0^2 + v1", "--dim", "2"], "not 2-homogeneous"),
    (["analyze", "--expr", "v0^2 +", "--dim", "2"], "line 1, column 7"),
    (["analyze", "--expr", "v0^2"], "--dim"),
    (["analyze"], "catalogue name"),
    (["analyze", "hopf4", "--alpha", "1"], "takes no parameters"),
    (["analyze", "beem3", "--params", "gamma=1"], "no parameter"),
    (["analyze", "beem3", "--params", "alpha"], "name=value"),
    (["analyze", "beem3", "--pairs", "0"], "--pairs"),
    (["analyze", "beem3", "--dim", "4"], "dimension 3"),
    (["export", "hopf4", "--out", "x.csv"], "metric field"),
])
def test_input_errors_exit_with_two(capsys, argv, message):
    code, out, err = run(capsys, *argv)
    assert code == 2 and out == ""
    assert message in err


def test_invalid_seed_environment(capsys, monkeypatch):
    monkeypatch.setenv("LIGHTCONE_SEED", "abc")
    code, _, err = run(capsys, "check", "minkowski2", "--property", "cones")
    assert code == 2 and "LIGHTCONE_SEED" in err


def test_export(capsys, tmp_path):
    path = tmp_path / "cone.csv"
    code, _, err = run(capsys, "export", "beem2", "--samples", "64", "--level", "1.0", "--out", str(path))
    assert code == 0 and "wrote 64 samples" in err
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["v0", "v1", "2L", "class", "component_id"]
    classes = {r[3] for r in rows[1:]}
    assert {"TIMELIKE", "SPACELIKE", "LEVEL"} <= classes


def test_module_entry_point():
    done = subprocess.run([sys.executable, "-m", "lightcone", "--version"], capture_output=True,
                          text=True, check=False)
    assert done.returncode == 0 and __version__ in done.stdout
