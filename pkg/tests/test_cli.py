import json
import subprocess
import sys

import pytest

from inflap.cli import parse_and_dispatch, parse_nonlinearity
from inflap.errors import UsageError


def run(argv, capsys):
    code = parse_and_dispatch(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_classify(capsys):
    code, rep = run(["classify", "--f", "power:q=3", "--selector", "Finv4"], capsys)
    assert code == 0 and rep["verdict"] == "Diverges" and rep["schema"] == 1
    assert rep["integral_estimate"] == "infinity"
    code, rep = run(["classify", "--f", "power:q=1", "--selector", "GammaInvF", "--K", "1"], capsys)
    assert code == 0 and rep["verdict"] == "Converges"


def test_csp(capsys, tmp_path):
    out = tmp_path / "csp.json"
    code, _ = run(["csp", "--f", "power:q=1", "--K", "1", "--kappa", "0.125", "--out", str(out)],
                  capsys)
    rep = json.loads(out.read_text())
    assert code == 0 and rep["pass"]
    assert rep["support_radius"] == pytest.approx(2.82843, abs=1e-5)
    assert rep["checks"][0]["target"] == "compact_solution"
    assert rep["checks"][0]["tolerance"] == 1e-6
    for name in ("phi", "psi", "solution"):
        assert (tmp_path / f"csp_{name}.csv").exists()


def test_counterexample(capsys):
    code, rep = run(["counterexample", "--alpha", "0.5", "--rmax", "10"], capsys)
    assert code == 0 and rep["min_value"] > 0
    assert rep["per_alpha"]["0.5"]["value_at_1"] == pytest.approx(35.6894, abs=1e-3)


def test_barrier_and_deadcore(capsys, tmp_path):
    code, rep = run(["barrier", "--f", "zero", "--nodes", "10000"], capsys)
    assert code == 0 and rep["checks"][0]["target"] == "barrier_ode"
    code, rep = run(["deadcore", "--f", "power:q=1", "--out", str(tmp_path / "d.json")], capsys)
    rep = json.loads((tmp_path / "d.json").read_text())
    assert code == 0 and rep["r_circ"] == 1.0 and rep["kink"]["ok"]
    assert [c["target"] for c in rep["checks"]] == ["deadcore_identity", "deadcore_supersolution",
                                                    "radial_supersolution"]
    lines = (tmp_path / "d_profile.csv").read_text().splitlines()
    assert lines[0] == "t,phi,dphi,d2phi"


def test_solve_compare_experiment(capsys, tmp_path):
    code, rep = run(["solve", "--f", "power:q=1,lambda=100", "--out", str(tmp_path / "s.json")],
                    capsys)
    rep = json.loads((tmp_path / "s.json").read_text())
    assert code == 0 and rep["dead_core_width"] > 0.1
    assert (tmp_path / "s_solution.csv").read_text().startswith("node,r,value")
    code, rep = run(["compare", "--f", "power:q=1,lambda=100"], capsys)
    assert code == 0 and rep["comparison"]["conclusion_holds"]
    code, rep = run(["compare", "--f", "power:q=1,lambda=100", "--violate", "900"], capsys)
    assert code == 2 and rep["comparison"]["violation_node"] == 900
    code, rep = run(["experiment", "--q", "1", "3", "--lambda", "100", "--n", "257"], capsys)
    assert code == 0 and [e["q"] for e in rep["experiments"]] == [1, 3]


def test_verification_failure_exit_code(capsys):
    # an unattainable tolerance makes the identity check fail
    code, rep = run(["deadcore", "--f", "power:q=1", "--tolerance", "1e-30"], capsys)
    assert code == 2 and rep["pass"] is False


@pytest.mark.parametrize("argv", [
    ["bogus"],
    ["classify", "--nope"],
    ["classify", "--f", "power:q=-1"],
    ["classify", "--f", "power:x=1"],
    ["barrier", "--R", "2"],
    ["csp", "--f", "power:q=3"],
    ["compare", "--violate", "1"],
    ["deadcore", "--f", "power:q=4"],
])
def test_usage_errors_exit_1(argv, capsys):
    with pytest.raises(SystemExit) as info:
        sys.exit(parse_and_dispatch(argv))
    assert info.value.code == 1


def test_run_error_exit_2(capsys):
    # F^{-1/4} is integrable for q = 1/2, so no barrier fits under a small eps
    code, rep = run(["barrier", "--f", "power:q=0.5", "--eps", "0.001"], capsys)
    assert code == 2
    assert rep["error"] == "NoBarrier" and rep["pass"] is False
    # R - delta <= 1 is a configuration problem, not a failed run
    code, _ = run(["csp", "--f", "power:q=1,lambda=100"], capsys)
    assert code == 1


def test_determinism(tmp_path):
    argv = [sys.executable, "-m", "inflap", "csp", "--f", "power:q=1", "--K", "1"]
    a = subprocess.run(argv, capture_output=True, check=True).stdout
    b = subprocess.run(argv, capture_output=True, check=True).stdout
    assert a == b
    assert json.loads(a)["support_radius"] == pytest.approx(2.82842712475, abs=1e-10)


def test_mini_language(tmp_path):
    assert parse_nonlinearity("power:q=2,lambda=3")(2.0) == 12.0
    assert parse_nonlinearity("zero").is_zero
    assert parse_nonlinearity("piecewise:0,1,1;1,2,1")(2.0) == 4.0
    path = tmp_path / "f.csv"
    path.write_text("s,f\n0,0\n1,2\n")
    assert parse_nonlinearity(f"table:{path}")(0.5) == 1.0
    with pytest.raises(UsageError):
        parse_nonlinearity("spline:1")
