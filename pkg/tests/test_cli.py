import csv
import json

import pytest

from salience.cli import (
    EXIT_CAP,
    EXIT_INFEASIBLE,
    EXIT_OK,
    EXIT_PARSE,
    EXIT_USAGE,
    EXIT_VERIFY,
    run_cli,
)

INSTANCE = {
    "schema_version": 1,
    "p": 2,
    "candidates": [[1, 1], [0, 0]],
    "voters": [[1, 0], [1, 0], [0, 1]],
    "weights": [0.1, 0.9],
    "constraint": {"type": "budget", "p": 2, "B": 1.0},
    "stochastic": {"type": "linear", "gamma0": 0.4, "gamma": [0.05]},
}


@pytest.fixture
def instance_file(tmp_path):
    path = tmp_path / "inst.json"
    path.write_text(json.dumps(INSTANCE))
    return path


def test_max_support_then_verify(instance_file, tmp_path, capsys):
    out = tmp_path / "sol.json"
    assert run_cli(["max-support", "--instance", str(instance_file), "--output", str(out)]) == EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["objective"]["votes_for_c1"] == 3
    assert run_cli(["verify", str(out)]) == EXIT_OK
    assert capsys.readouterr().out.strip().endswith("ok")


def test_verify_rejects_edited_solution(instance_file, tmp_path):
    out = tmp_path / "sol.json"
    run_cli(["majority", "--instance", str(instance_file), "--output", str(out)])
    doc = json.loads(out.read_text())
    doc["instance"]["weights"] = [0.9, 0.1]
    out.write_text(json.dumps(doc))
    assert run_cli(["verify", str(out)]) == EXIT_VERIFY


def test_stochastic_csv(instance_file, capsys):
    assert run_cli(["stochastic", "--instance", str(instance_file), "--format", "csv"]) == EXIT_OK
    header, row = capsys.readouterr().out.strip().splitlines()
    assert header.split(",") == ["kind", "x", "expected_votes"]


def test_majority_no_win_exit(tmp_path):
    doc = dict(INSTANCE, voters=[[0, 0], [0, 0], [1, 1]])
    path = tmp_path / "lost.json"
    path.write_text(json.dumps(doc))
    assert run_cli(["majority", "--instance", str(path)]) == EXIT_INFEASIBLE


def test_parse_error_exit(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(dict(INSTANCE, weights=[0.5, 0.6])))
    assert run_cli(["max-support", "--instance", str(path)]) == EXIT_PARSE
    assert "E_SIMPLEX" in capsys.readouterr().err


def test_missing_file_exit(tmp_path):
    assert run_cli(["max-support", "--instance", str(tmp_path / "nope.json")]) == EXIT_PARSE


def test_usage_errors():
    assert run_cli([]) == EXIT_USAGE
    assert run_cli(["frobnicate"]) == EXIT_USAGE
    assert run_cli(["max-support"]) == EXIT_USAGE


def test_cap_exit(tmp_path):
    # 2^12 cells per axis on 8 issues is far above the grid cap
    doc = dict(INSTANCE, candidates=[[1] * 8, [0] * 8], voters=[[1] * 8], weights=[0.125] * 8)
    doc["constraint"] = {"type": "interval", "intervals": [[0, 1]] * 8}
    path = tmp_path / "big.json"
    path.write_text(json.dumps(doc))
    assert run_cli(["oracle", "grid", "--instance", str(path), "--resolution", str(1 / 4096)]) == EXIT_CAP


def test_oracles(instance_file, capsys):
    for cmd in (["oracle", "grid", "--resolution", "0.1"], ["oracle", "structured"], ["oracle", "pgd"]):
        assert run_cli(cmd + ["--instance", str(instance_file)]) == EXIT_OK
        assert "value" in json.loads(capsys.readouterr().out)


@pytest.mark.parametrize(
    "args",
    [
        ["gadget", "tcwms", "--nprime", "2", "--ellprime", "1"],
        ["gadget", "tcwp", "--nprime", "1", "--ellprime", "1"],
        ["gadget", "theta-l", "--nprime", "3", "--ellprime", "2"],
        ["gadget", "max2sat", "--vars", "2", "--clauses", "3", "--beta1", "1", "--beta2", "1", "--alpha", "3"],
    ],
)
def test_gadgets_emit_valid_instances(args, tmp_path):
    out = tmp_path / "g.json"
    assert run_cli(args + ["--seed", "4", "--output", str(out)]) == EXIT_OK
    from salience.io import load_instance

    assert load_instance(out).instance.n >= 1


def test_gadget_overflow_is_usage_error():
    assert run_cli(["gadget", "theta-l", "--nprime", "1", "--ellprime", "1"]) == EXIT_USAGE


def test_bench_rows(tmp_path, instance_file):
    out = tmp_path / "b.csv"
    assert run_cli(["bench", "--count", "3", "--seed", "1", "--omit-timing", "--output", str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == "instance_id,n,ell,m,p,constraint,objective,wall_time"
    assert len(lines) == 4 and all(l.endswith(",omitted") for l in lines[1:])
    assert run_cli(["bench", "--problem", "majority", "--instance", str(instance_file), "--output", str(out)]) == 0
    row = next(csv.DictReader(out.read_text().splitlines()))
    assert row["objective"] == "win" and row["constraint"] == "budget(p=2,B=1)"
