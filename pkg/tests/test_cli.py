from __future__ import annotations

import json

import pytest

from fconvex import cli, verify

KERNEL = "task: kernel\ndim: 2\nrho: [0.05, 10, 5]\n"
WALL = """task: solve-measure
dim: 2
measure:
  walls: [{normal: [1, 0, 0], weight: 1}]
query: {rho: [0.2, 1.5, 3], theta: [0, 3, 4]}
"""
AT_ATOM = """task: solve-measure
dim: 2
measure: {atoms: [{point: [0, 0, 1], weight: 1}]}
query: {points: [[0, 0, 1]]}
"""
ONE_DIM = """task: solve-1d
dim: 1
atoms: [{t: 0, weight: 1}]
density: {expr: "exp(abs(t)/2)", growth: [1, 0.5], breakpoints: [0]}
A: 0.5
t: [-2, 2, 5]
"""


def run(tmp_path, text, name="job", **kw):
    cfg = tmp_path / f"{name}.yaml"
    cfg.write_text(text)
    out = tmp_path / f"out_{name}"
    return cli.run(cfg, out, **kw), out


def test_kernel_job(tmp_path):
    code, out = run(tmp_path, KERNEL)
    assert code == cli.EXIT_OK
    lines = (out / "kernel.csv").read_text().splitlines()
    assert lines[0].startswith("# ") and lines[1] == "rho,k,ode_residual" and len(lines) == 7
    rep = json.loads((out / "report.json").read_text())
    assert rep["task"] == "kernel" and rep["outputs"] == ["kernel.csv"]
    assert rep["residuals"]["ode_residual_max"] < 1e-10
    assert set(rep) >= {"wall_time", "results", "warnings", "convex"}


def test_output_is_byte_identical(tmp_path):
    _, a = run(tmp_path, WALL, "a")
    _, b = run(tmp_path, WALL, "b")
    assert (a / "solution.csv").read_bytes() == (b / "solution.csv").read_bytes()


@pytest.mark.parametrize("text", ["task: kernel\ndim: 5\n", "task: nope\ndim: 2\n", "dim: 2\n", "- 1\n- 2\n"])
def test_bad_config(tmp_path, text):
    assert run(tmp_path, text)[0] == cli.EXIT_CONFIG


def test_query_at_atom_is_refused(tmp_path):
    code, out = run(tmp_path, AT_ATOM)
    assert code == cli.EXIT_REFUSAL
    assert json.loads((out / "report.json").read_text())["warnings"]


def test_require_convex(tmp_path):
    assert run(tmp_path, WALL, "plain")[0] == cli.EXIT_OK
    code, out = run(tmp_path, WALL, "strict", require_convex=True)
    assert code == cli.EXIT_NOT_CONVEX
    assert json.loads((out / "report.json").read_text())["convex"] is False


def test_one_dim_job_with_density(tmp_path):
    code, out = run(tmp_path, ONE_DIM)
    assert code == cli.EXIT_OK
    rep = json.loads((out / "report.json").read_text())
    assert rep["outputs"]


def test_verify_job(tmp_path):
    code, out = run(tmp_path, "task: verify\nsuites: [kernel, one-dim]\n")
    assert code == cli.EXIT_OK
    assert (out / "verify.csv").read_text().startswith("suite,check,passed,value,tolerance\n")


def test_failed_verify_exit_code(tmp_path, monkeypatch):
    monkeypatch.setitem(verify.SUITES, "broken", lambda seed: [verify.CheckResult("broken", "x", False, 1.0, 0.0)])
    assert run(tmp_path, "task: verify\nsuites: [broken]\n")[0] == cli.EXIT_VERIFY


def test_unknown_suite_is_config_error(tmp_path):
    assert run(tmp_path, "task: verify\nsuites: [nope]\n")[0] == cli.EXIT_CONFIG


def test_main_parses_arguments(tmp_path):
    cfg = tmp_path / "k.yaml"
    cfg.write_text(KERNEL)
    assert cli.main([str(cfg), "--out", str(tmp_path / "o")]) == 0
