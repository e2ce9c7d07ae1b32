from __future__ import annotations

import csv
import io
import json
import urllib.error
from pathlib import Path

import pytest
from click.testing import CliRunner

from phi4forms.cli import main

ROOT = Path(__file__).resolve().parents[1]
B_FORMULA = {"terms": [[1, 3, None], [7, 2, None], [4, 1, None], [1, 0, None]], "ap_sign": 0}


@pytest.fixture
def run(tmp_path):
    runner = CliRunner()

    def go(*args):
        return runner.invoke(main, ["--cache", str(tmp_path / "counts.jsonl"), *args])
    return go


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_count_model_file_then_cached(run):
    path = ROOT / "fixtures" / "B.json"
    first = run("--format", "csv", "count", str(path), "--primes", "5..13")
    assert first.exit_code == 0, first.output
    got = rows(first.output)
    assert [int(r["count"]) for r in got] == [321, 715, 2223, 3433]
    assert {r["cached"] for r in got} == {"False"}
    again = rows(run("--format", "csv", "count", str(path), "--primes", "5..13").output)
    assert {r["cached"] for r in again} == {"True"}


def test_count_fixture_name_and_bad_prime(run):
    res = run("--format", "json", "count", "Q1", "--primes", "3,5")
    assert res.exit_code == 0
    data = json.loads(res.output)
    assert [d["p"] for d in data] == [3, 5]
    assert run("count", "Q1", "--primes", "2..5").exit_code == 2
    assert run("count", "no-such-model", "--primes", "5").exit_code == 2


def test_malformed_config_exit_2(run, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    for cmd in ("reduce", "pipeline"):
        res = run(cmd, str(bad))
        assert res.exit_code == 2
        assert "error" in res.output
    unknown = tmp_path / "unknown.json"
    unknown.write_text(json.dumps({"name": "u", "steps": [{"op": "fixture", "fixture": "ghost"}]}))
    res = run("pipeline", str(unknown))
    assert res.exit_code == 2 and "ghost" in res.output


def test_pipeline_writes_reports(run, tmp_path):
    cfg = tmp_path / "b.json"
    cfg.write_text(json.dumps({"name": "b", "links": [{"from": "B", "relation": "formula",
                                                        "formula": B_FORMULA, "primes": [5, 7]}]}))
    out = tmp_path / "out"
    res = run("pipeline", str(cfg), "--output", str(out))
    assert res.exit_code == 0, res.output
    assert res.output.startswith("# b: PASS")
    assert json.loads((out / "report.json").read_text())["ok"]
    assert (out / "report.csv").read_text().startswith("check,model,p")
    assert (out / "report.md").exists()


def test_pipeline_failure_exit_1(run, tmp_path):
    wrong = dict(B_FORMULA, terms=[[1, 3, None], [1, 0, None]])
    cfg = tmp_path / "w.json"
    cfg.write_text(json.dumps({"name": "w", "links": [{"from": "B", "relation": "formula",
                                                        "formula": wrong, "primes": [5]}]}))
    assert run("pipeline", str(cfg)).exit_code == 1


def test_reduce_shipped_config(run):
    res = run("--format", "json", "reduce", "w3_7", "--primes", "3")
    assert res.exit_code == 0, res.output
    data = json.loads(res.output)
    assert data["ok"] and data["steps"]


def test_forms_expand(run):
    res = run("--format", "csv", "forms", "expand", "7.3.eta", "--precision", "5")
    assert res.exit_code == 0
    assert [int(r["a_n"]) for r in rows(res.output)] == [1, -3, 0, 5, 0]
    res = run("--format", "json", "forms", "expand", "1^3 7^3", "--precision", "3")
    assert [d["a_n"] for d in json.loads(res.output)] == [1, -3, 0]
    assert run("forms", "expand", "garbage!").exit_code == 2
    assert run("forms", "expand", "1^1").exit_code == 2


def test_forms_fetch_offline(run, monkeypatch, tmp_path):
    def refuse(url, timeout=None):
        raise urllib.error.URLError("offline")

    monkeypatch.setattr("urllib.request.urlopen", refuse)
    res = run("forms", "fetch", "13.4.a.a", "--dest", str(tmp_path))
    assert res.exit_code == 1 and "network unavailable" in res.output


def test_verify_single_criterion(run):
    res = run("verify", "criterion", "--only", "10")
    assert res.exit_code == 0
    assert res.output.startswith("criterion 10 PASS")
    assert run("verify", "criterion").exit_code == 2
    assert run("verify", "criterion", "--only", "99").exit_code == 2
