from __future__ import annotations

import json

import pytest

from trunclab import cli
from trunclab.verify import verify_suite


@pytest.mark.parametrize("suite", ["identities", "oracles", "bounds"])
def test_suites_pass(suite):
    rep = verify_suite(suite, seed=3)
    assert rep["passed"], rep
    assert all(c["checked"] > 0 for c in rep["checks"])


def test_window_outside_hypothesis_is_reported():
    rep = verify_suite("identities")
    win = next(c for c in rep["checks"] if c["name"] == "window_identity")
    assert win["outside_hypothesis"] == [(5, 2), (10, 3), (11, 3), (26, 5), (27, 5), (28, 5), (29, 5)]


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_delta(capsys):
    code, out, _ = run(capsys, "delta", "--x", "10", "--class", "f1", "--method", "brute")
    obj = json.loads(out)
    assert code == 0 and obj["value"] == "823/2520" and obj["certificate"] == "global"
    assert set(obj) >= {"x", "class", "method", "value", "minimizer", "certificate", "nodes_visited"}


def test_cli_exit_codes(capsys, tmp_path):
    assert run(capsys, "delta", "--x", "400", "--method", "brute")[0] == cli.EXIT_BUDGET
    assert run(capsys, "delta", "--x", "10", "--class", "f0", "--method", "bnb")[0] == cli.EXIT_INVALID
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "round", "--x", "3", "--input", str(bad))[0] == cli.EXIT_INVALID
    with pytest.raises(SystemExit) as e:
        cli.main(["delta", "--bogus"])
    assert e.value.code == 2
    assert run(capsys, "--threads", "0", "constants")[0] == cli.EXIT_INVALID


def test_cli_verify_and_reproducible(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(capsys, "--out-dir", str(a), "--seed", "5", "verify", "--suite", "bounds")[0] == 0
    assert run(capsys, "--out-dir", str(b), "--seed", "5", "verify", "--suite", "bounds")[0] == 0
    assert (a / "verify_bounds.json").read_bytes() == (b / "verify_bounds.json").read_bytes()


def test_cli_round_realize_construct(capsys, tmp_path):
    f = tmp_path / "f.json"
    f.write_text(json.dumps({"x_max": 4, "class": "F1", "primes": {"2": "1", "3": "1"}}))
    code, out, _ = run(capsys, "--out-dir", str(tmp_path), "round", "--x", "4", "--input", str(f),
                       "--trace", "trace.json")
    assert code == 0 and json.loads(out)["final_sum"] == "5/12"
    trace = json.loads((tmp_path / "trace.json").read_text())
    assert [s["p"] for s in trace["steps"]] == [3, 2]
    pat = tmp_path / "p.json"
    pat.write_text(json.dumps({"x_max": 10, "class": "F1",
                               "primes": {"2": "-1", "3": "-1", "5": "-1", "7": "-1"}}))
    code, out, _ = run(capsys, "realize", "--pattern", str(pat), "--x", "10", "--max-candidates", "100")
    assert code == 0 and json.loads(out)["q"] == 43
    assert run(capsys, "realize", "--pattern", str(pat), "--x", "10", "--max-candidates", "2")[0] == cli.EXIT_BUDGET
    code, out, _ = run(capsys, "construct", "--kind", "extremal", "--x", "10")
    assert json.loads(out)["value"]["value"] == "-437/2520"
    code, out, _ = run(capsys, "construct", "--kind", "window", "--x", "25", "--N", "2")
    assert json.loads(out)["holds"] is True
    assert run(capsys, "construct", "--kind", "window", "--x", "4", "--N", "2")[0] == cli.EXIT_INVALID
    code, out, _ = run(capsys, "construct", "--kind", "prop31", "--x", "100")
    assert json.loads(out)["identity_holds"] is True


def test_cli_rho_and_constants(capsys):
    code, out, _ = run(capsys, "rho", "--u", "2")
    assert code == 0 and abs(json.loads(out)["rho"] - 0.3068528194400547) < 1e-12
    code, out, _ = run(capsys, "constants")
    obj = json.loads(out)
    assert obj["kappa"] == 0.32867 and obj["gamma"].startswith("0.5772156649")


def test_cli_scan_resume(capsys, tmp_path):
    args = ["--out-dir", str(tmp_path), "scan", "--kind", "turan", "--bound", "300000",
            "--csv", "t.csv", "--checkpoint", "t.ckpt", "--flush-every", "100000", "--sample-every", "1000"]
    assert run(capsys, *args)[0] == 0
    ref_csv = (tmp_path / "t.csv").read_bytes()
    ref_ckpt = (tmp_path / "t.ckpt").read_bytes()
    # resume from a checkpoint written part-way
    assert run(capsys, *args[:6], "150000", *args[7:])[0] == 0
    assert run(capsys, *args, "--resume")[0] == 0
    assert (tmp_path / "t.csv").read_bytes() == ref_csv
    assert (tmp_path / "t.ckpt").read_bytes() == ref_ckpt
    code, out, _ = run(capsys, "scan", "--kind", "polya", "--bound", "1000", "--require-certified")
    assert code == 0 and json.loads(out)["certified"]


def test_env_override(capsys, monkeypatch):
    monkeypatch.setenv("TRUNCLAB_X", "4")
    monkeypatch.setenv("TRUNCLAB_METHOD", "brute")
    code, out, _ = run(capsys, "delta")
    assert code == 0 and json.loads(out)["value"] == "5/12"
    monkeypatch.setenv("TRUNCLAB_THREADS", "abc")
    with pytest.raises(SystemExit):
        cli.main(["constants"])
