import json
import subprocess
import sys

import pytest

from improving_bandits.cli import main


@pytest.fixture
def two_arm(tmp_path):
    path = tmp_path / "two_arm.json"
    path.write_text(json.dumps({"arms": [{"family": "linear", "slope": 0.1},
                                         {"family": "constant", "value": 0.4}]}))
    return path


def test_run_writes_rows(tmp_path, capsys):
    out = tmp_path / "r.csv"
    code = main(["run", "--policy", "rrr", "--k", "4", "--T", "8", "--m", "1.0",
                 "--trials", "10", "--seed", "1", "--out", str(out)])
    assert code == 0
    assert len(out.read_text().splitlines()) == 11
    assert "guaranteed expected ALG" in capsys.readouterr().out


def test_run_max_objective(capsys):
    assert main(["run", "--policy", "explore_exploit", "--k", "4", "--T", "64", "--trials", "3", "--objective", "max"]) == 0
    assert "best pull" in capsys.readouterr().out


def test_run_random_family(capsys):
    assert main(["run", "--policy", "uniform_baseline", "--k", "3", "--T", "20", "--random-family", "sqrt"]) == 0


def test_validate_rejects_bad_instance(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"arms": [{"family": "explicit", "increments": [0.1, 0.2]}]}))
    assert main(["validate", "--instance", str(bad)]) != 0
    assert "t=1" in capsys.readouterr().err


def test_validate_ok(two_arm, capsys):
    assert main(["validate", "--instance", str(two_arm), "--T", "10"]) == 0


def test_oracle(two_arm, capsys):
    assert main(["oracle", "--instance", str(two_arm), "--T", "10"]) == 0
    out = capsys.readouterr().out
    assert "opt arm 0" in out
    assert "OPT 5.5" in out
    assert "allocation (10,0)" in out


def test_oracle_needs_horizon(two_arm, capsys):
    assert main(["oracle", "--instance", str(two_arm)]) != 0


def test_missing_file(capsys):
    assert main(["validate", "--instance", "/no/such/file.json"]) != 0
    assert "error" in capsys.readouterr().err


def test_unwritable_output(capsys):
    code = main(["run", "--policy", "uniform_baseline", "--k", "4", "--T", "8", "--out", "/no/such/dir/r.csv"])
    assert code != 0


def test_bad_policy(capsys):
    assert main(["run", "--policy", "ucb", "--k", "4", "--T", "8"]) != 0


def test_module_entry_point(two_arm):
    res = subprocess.run([sys.executable, "-m", "improving_bandits", "oracle", "--instance", str(two_arm), "--T", "10"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "opt arm 0" in res.stdout
