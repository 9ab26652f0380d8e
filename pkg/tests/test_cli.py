import csv
import json
import subprocess
import sys

import pytest

from ergocycle.cli import main

CIRCLE_CFG = """
[system]
kind = circle
theta = sqrt2m1

[run]
n = 2
iterations = 20000
samples = 4
seed = 3
"""


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_convergents_csv(capsys):
    code, out, _ = run(capsys, "convergents", "--theta", "sqrt2m1", "--count", "4")
    assert code == 0
    rows = list(csv.DictReader(out.splitlines()))
    assert [(int(r["k_r"]), int(r["m_r"])) for r in rows] == [(0, 1), (1, 2), (2, 5), (5, 12)]
    assert [int(r["det_identity"]) for r in rows[1:]] == [1, -1, 1]


def test_convergents_bad_theta(capsys):
    code, _, err = run(capsys, "convergents", "--theta", "nonsense")
    assert code == 2 and "--theta" in err


def test_equiv_example(capsys):
    code, out, _ = run(capsys, "equiv-decide", "--case", "equiv0",
                       "--input", '{"eta":{"p":"5","q":"3"}}')
    assert code == 0
    assert json.loads(out) == {"answer": "yes", "witness": {"m": 3}}


def test_equiv_cases(capsys):
    z = {"p": "0", "q": "0"}
    half = {"p": "1/2", "q": "0"}
    code, out, _ = run(capsys, "equiv-decide", "--case", "bern-phase", "--input",
                       json.dumps({"l1": half, "l2": z, "l1p": z, "l2p": z, "n": 2}))
    assert code == 0 and json.loads(out)["answer"] == "yes"
    code, out, _ = run(capsys, "equiv-decide", "--case", "bern-w", "--input",
                       json.dumps({"c1": [0], "c1p": [1], "n": 2, "alphabet": [0, 1]}))
    assert json.loads(out)["answer"] == "yes"
    th = {"p": "0", "q": "1"}
    code, out, _ = run(capsys, "equiv-decide", "--case", "rot-phase", "--input",
                       json.dumps({"l1": th, "l2": th, "l1p": z, "l2p": z, "n": 1}))
    assert json.loads(out) == {"answer": "yes", "witness": {"a": "1"}}


def test_equiv_undecidable_and_bad_input(capsys):
    z = {"p": "0", "q": "0"}
    code, out, _ = run(capsys, "equiv-decide", "--case", "rot-phase", "--input",
                       json.dumps({"l1": {"q": "1/2"}, "l2": z, "l1p": z, "l2p": z, "n": 1}))
    assert code == 1 and json.loads(out)["answer"] == "undecidable"
    code, _, err = run(capsys, "equiv-decide", "--case", "equiv0", "--input", "{oops")
    assert code == 2 and "--input" in err
    code, _, err = run(capsys, "equiv-decide", "--case", "bern-phase", "--input", "{}")
    assert code == 2 and "l1" in err


def test_empty_config_is_usage_error(capsys, tmp_path):
    cfg = tmp_path / "empty.ini"
    cfg.write_text("")
    code, _, err = run(capsys, "ergodicity-run", "--config", str(cfg))
    assert code == 2 and "usage error" in err


def test_unknown_config_field(capsys, tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[run]\nn = 2\nwarp = 9\n")
    code, _, err = run(capsys, "ergodicity-run", "--config", str(cfg))
    assert code == 2 and "run.warp" in err


def test_bad_config_value(capsys, tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[run]\nn = two\n")
    code, _, err = run(capsys, "ergodicity-run", "--config", str(cfg))
    assert code == 2 and "run.n" in err


def test_no_subcommand(capsys):
    code, _, _ = run(capsys)
    assert code == 2


def test_ergodicity_circle(capsys, tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text(CIRCLE_CFG)
    trace = tmp_path / "trace.csv"
    code, out, _ = run(capsys, "ergodicity-run", "--config", str(cfg), "--csv", str(trace))
    rep = json.loads(out)
    assert code == 0 and rep["verdict"] == "pass"
    assert set(rep["observables"]) == {"chi_half_E11", "chi_C_E12", "one_v"}
    rows = list(csv.DictReader(trace.open()))
    assert rows and set(rows[0]) == {"observable", "N", "deviation"}


def test_ergodicity_negative_control_json(capsys, tmp_path):
    cfg = tmp_path / "neg.json"
    cfg.write_text(json.dumps({"system": {"kind": "circle"},
                               "run": {"n": 2, "iterations": 5000, "samples": 2,
                                       "degenerate": "true", "expect": "non-ergodic"}}))
    code, out, _ = run(capsys, "ergodicity-run", "--config", str(cfg))
    rep = json.loads(out)
    assert code == 0
    assert rep["observables"]["one_E11"]["deviation"] == pytest.approx(0.5)


def test_ergodicity_bernoulli(capsys, tmp_path):
    cfg = tmp_path / "b.ini"
    cfg.write_text("[system]\nkind = bernoulli\nalphabet = 0,1\nweights = 1/2,1/2\nc1 = 1\n"
                   "[run]\nn = 2\niterations = 20000\nsamples = 3\n")
    code, out, _ = run(capsys, "ergodicity-run", "--config", str(cfg))
    assert code == 0 and json.loads(out)["verdict"] == "pass"


def test_reports_are_byte_identical(capsys, tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text(CIRCLE_CFG)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["ergodicity-run", "--config", str(cfg), "--out", str(a)]) == 0
    assert main(["ergodicity-run", "--config", str(cfg), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_env_seed_override(capsys, tmp_path, monkeypatch):
    cfg = tmp_path / "c.ini"
    cfg.write_text(CIRCLE_CFG)
    monkeypatch.setenv("ERGOCYCLE_SEED", "99")
    code, out, _ = run(capsys, "ergodicity-run", "--config", str(cfg))
    assert json.loads(out)["seed"] == 99
    monkeypatch.setenv("ERGOCYCLE_SEED", "x")
    code, _, err = run(capsys, "ergodicity-run", "--config", str(cfg))
    assert code == 2 and "ERGOCYCLE_SEED" in err


def test_singular_build(capsys, tmp_path):
    dump = tmp_path / "pts.txt"
    table = tmp_path / "cover.csv"
    code, out, _ = run(capsys, "singular-build", "--depth", "20", "--samples", "5",
                       "--dump", str(dump), "--csv", str(table))
    rep = json.loads(out)
    assert code == 0 and all(rep["checks"].values())
    lines = dump.read_text().split()
    assert len(lines) == 5
    rows = list(csv.DictReader(table.open()))
    assert float(rows[-1]["cover_bound"]) < 1e-3


def test_singular_bad_weights(capsys):
    code, _, err = run(capsys, "singular-build", "--weights", "3/2")
    assert code == 2


def test_l1_demo(capsys):
    code, out, _ = run(capsys, "l1-demo", "--mode", "atomic", "--param", "3")
    rep = json.loads(out)
    assert code == 0 and rep["bound"] == "11/6"
    code, out, _ = run(capsys, "l1-demo", "--mode", "interval", "--param", "1/16", "--count", "4")
    rep = json.loads(out)
    assert code == 0 and rep["bound"] == 4
    code, _, _ = run(capsys, "l1-demo", "--mode", "interval", "--param", "2")
    assert code == 2


@pytest.mark.parametrize("mode", ["periodic", "aperiodic"])
def test_trivialize(capsys, mode):
    code, out, _ = run(capsys, "trivialize", "--mode", mode, "--k", "5", "--n", "3")
    rep = json.loads(out)
    assert code == 0 and rep["max_residual_ok"]
    if mode == "periodic":
        assert all(0 <= p < 2 * 3.141592653589793 / 5 for p in rep["lambda_phases"])


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "ergocycle.cli", "convergents",
                          "--theta", "golden", "--count", "3"],
                         capture_output=True, text=True, check=True)
    assert res.stdout.splitlines()[0].startswith("r,b_r,k_r,m_r")
