import csv
import io
import json
from pathlib import Path

import pytest

from randlimits.cli import SEED_ENV, main

PRESET = Path(__file__).parent.parent / "experiments" / "drunkard.json"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_classify(capsys):
    code, out, _ = run(capsys, "markov", "classify", "--p", "2/5")
    assert code == 0 and json.loads(out)["kind"] == "positive-recurrent"


def test_absorb_exact(capsys):
    _, out, _ = run(capsys, "markov", "absorb", "--p", "3/5", "--q0", "2/5", "--i", "1")
    assert json.loads(out)["absorption"]["exact"] == "4/9"


def test_hitmax_csv(capsys):
    _, out, _ = run(capsys, "markov", "hitmax", "--p", "1/2", "--q0", "1/2", "--k", "2", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["probability"] for r in rows] == ["3/4", "1/2", "1/4"]


def test_uhf_prob(capsys):
    _, out, _ = run(capsys, "uhf", "prob", "--p", "1/2", "--q0", "1/2", "--k", "1")
    doc = json.loads(out)
    assert doc["finite_dimensional"]["exact"] == "1"
    assert doc["bounded_prime"]["prime"] == 2


def test_simplex_traces(capsys):
    _, out, _ = run(capsys, "simplex", "traces", "--p", "1/2", "--q0", "1/2", "--k", "2")
    assert json.loads(out)["exact"] == "2/3"


def test_villadsen(capsys):
    _, out, _ = run(capsys, "villadsen", "mean", "--beta", "ln2")
    assert json.loads(out)["expected_R"] == pytest.approx(0.693147, abs=1e-6)
    _, out, _ = run(capsys, "villadsen", "zstable", "--family", "one_minus_inverse_square")
    assert json.loads(out)["exact"] == "0"
    _, out, _ = run(capsys, "villadsen", "sample", "--trials", "4", "--format", "csv")
    assert out.splitlines()[0] == "trial,w0,r" and len(out.splitlines()) == 5


def test_seed_sources(capsys, monkeypatch):
    argv = ("uhf", "sample", "--p", "1/2", "--q0", "1/2", "--trials", "3")
    _, a, _ = run(capsys, *argv, "--seed", "42")
    monkeypatch.setenv(SEED_ENV, "42")
    _, b, _ = run(capsys, *argv)
    _, c, _ = run(capsys, *argv, "--seed", "43")
    assert a == b != c


def test_samples_stable_under_trial_count(capsys):
    argv = ("simplex", "sample", "--p", "1/2", "--q0", "1/2", "--measure", "C", "--seed", "9")
    _, few, _ = run(capsys, *argv, "--trials", "2")
    _, many, _ = run(capsys, *argv, "--trials", "5")
    assert json.loads(many)[:2] == json.loads(few)


def test_graph(capsys):
    _, out, _ = run(capsys, "graph", "sample", "--n", "6", "--seed", "1")
    assert out.startswith("# n=6") and len(out.splitlines()) == 1 + 9
    _, out, _ = run(capsys, "graph", "ktheory", "--n", "2")
    assert json.loads(out)[0]["k0"] == "Z/8"


def test_experiment(capsys, tmp_path):
    dest = tmp_path / "report.json"
    code, _, _ = run(capsys, "experiment", "run", str(PRESET), "--trials", "20000", "--output", str(dest))
    doc = json.loads(dest.read_text())
    assert code == 0 and doc["passed"] and doc["trials"] == 20000
    code, out, _ = run(capsys, "experiment", "run", str(PRESET), "--trials", "20000", "--threads", "2")
    assert out == dest.read_text()


def test_experiment_seed_override(capsys):
    _, a, _ = run(capsys, "experiment", "run", str(PRESET), "--trials", "100")
    _, b, _ = run(capsys, "experiment", "run", str(PRESET), "--trials", "100", "--seed", "1")
    assert json.loads(a)["master_seed"] == 20240601 and json.loads(b)["master_seed"] == 1


def test_bad_config(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"construction": "Uhf", "trials": 0, "master_seed": 1}')
    code, _, err = run(capsys, "experiment", "run", str(bad))
    assert code == 2 and "trials" in err


def test_value_error(capsys):
    code, _, err = run(capsys, "markov", "absorb", "--p", "3/5", "--q0", "2/5", "--i", "-1")
    assert code == 2 and err.startswith("error:")
