"""Tests for the command-line interface."""

import io
import json

import pytest

from src.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, run
from src.synthetic import clustered_corpus
from src.terms import record_to_json


@pytest.fixture
def corpus(tmp_path):
    path = tmp_path / "corpus.jsonl"
    records = clustered_corpus(n=100, seed=1)
    path.write_text("".join(json.dumps(record_to_json(r)) + "\n" for r in records), encoding="utf-8")
    return path


def test_featurize(corpus, capsys):
    assert run(["featurize", str(corpus)]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 100
    first = json.loads(lines[0])
    assert first["seq"] == 0
    assert len(first["tactic_hash"]) == 16
    assert all(count == 1 for count in first["features"].values())


def test_train_is_deterministic(corpus, tmp_path):
    a, b = tmp_path / "a.snap", tmp_path / "b.snap"
    for path in (a, b):
        assert run(["train", str(corpus), "--model", "rforest", "--seed", "7", "--snapshot", str(path)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_train_writes_checkpoints(corpus, tmp_path):
    path = tmp_path / "model.snap"
    assert run(["train", str(corpus), "--snapshot", str(path), "--checkpoint-every", "40"]) == EXIT_OK
    assert (tmp_path / "model.snap.v40").exists()
    assert (tmp_path / "model.snap.v80").exists()
    assert not (tmp_path / "model.snap.v100").exists()


def test_predict_reads_state_from_stdin(corpus, tmp_path, monkeypatch, capsys):
    path = tmp_path / "model.snap"
    assert run(["train", str(corpus), "--model", "lshf", "--snapshot", str(path)]) == EXIT_OK
    record = json.loads(corpus.read_text(encoding="utf-8").splitlines()[10])
    capsys.readouterr()
    monkeypatch.setattr("sys.stdin", io.StringIO(json.dumps({"hyps": record["hyps"], "goal": record["goal"]})))
    assert run(["predict", "--snapshot", str(path), "-k", "3"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert 1 <= len(lines) <= 3
    rank, name, hex_hash = lines[0].split("\t")
    assert (rank, name) == ("1", record["tactic"])
    assert len(hex_hash) == 16


def test_eval_chrono_reports_every_model(corpus, capsys):
    assert run(["eval-chrono", str(corpus), "--model", "knn-exact", "--model", "lshf"]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["protocol"] == "chrono"
    assert set(report["models"]) == {"knn-exact", "lshf"}
    assert "knn-exact|lshf" in report["union"]


def test_eval_split_writes_run_directory(corpus, tmp_path, capsys):
    log_dir = tmp_path / "runs"
    args = ["eval-split", str(corpus), "--model", "knn-exact", "--test-modules", "Synthetic.M4", "--log-dir", str(log_dir)]
    assert run(args) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["models"]["knn-exact"]["n_cases"] == 20
    (run_dir,) = log_dir.glob("run_split_*")
    for name in ("report.json", "per_case.csv", "model_summary.csv", "per_module.csv"):
        assert (run_dir / name).exists()


def test_eval_split_by_fraction(corpus, capsys):
    assert run(["eval-split", str(corpus), "--model", "rforest", "--test-frac", "0.1"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["models"]["rforest"]["n_cases"] == 10


def test_export_xgb(corpus, tmp_path):
    out = tmp_path / "rows.txt"
    args = ["export-xgb", str(corpus), "--ratio", "2", "--mode", "random", "--output", str(out)]
    assert run(args) == EXIT_OK
    lines = out.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 300
    assert lines[0].startswith("1 qid:0 ")


def test_bench(capsys):
    assert run(["bench", "--n", "60", "--queries", "5", "--model", "knn-exact"]) == EXIT_OK
    (result,) = json.loads(capsys.readouterr().out)
    assert result["model"] == "knn-exact"
    assert result["n_examples"] == 60


def test_tune_rf(corpus, capsys):
    assert run(["tune-rf", str(corpus), "--test-modules", "Synthetic.M4"]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "n_max,impurity,n_trees,top1,top10"
    assert len(out) == 1 + 7 * 5


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["train", "{corpus}"],
        ["eval-chrono", "{corpus}", "--features", "X"],
        ["eval-chrono", "{corpus}", "--model", "svm"],
        ["eval-split", "{corpus}"],
        ["eval-split", "{corpus}", "--test-frac", "1.5"],
        ["train", "{corpus}", "--snapshot", "x.snap", "--tries", "0"],
        ["eval-chrono", "{corpus}", "--seed", "-1"],
        ["export-xgb", "{corpus}", "--ratio", "0"],
        ["predict", "--snapshot", "x.snap", "--seed", "3"],
        ["predict", "--snapshot", "x.snap", "--features", "O,W"],
    ],
)
def test_usage_errors(argv, corpus):
    assert run([a.format(corpus=corpus) for a in argv]) == EXIT_USAGE


def test_malformed_corpus_line_is_a_data_error(tmp_path, capsys):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"goal": "(f x)", "tactic": "auto"}\n{"goal": "(f x", "tactic": "auto"}\n', encoding="utf-8")
    assert run(["eval-chrono", str(path)]) == EXIT_DATA
    assert f"{path}:2:" in capsys.readouterr().err


def test_missing_corpus_is_a_data_error(tmp_path):
    assert run(["featurize", str(tmp_path / "missing.jsonl")]) == EXIT_DATA


def test_corrupt_snapshot_is_a_data_error(tmp_path, monkeypatch):
    path = tmp_path / "junk.snap"
    path.write_bytes(b"not a snapshot")
    monkeypatch.setattr("sys.stdin", io.StringIO('{"goal": "x"}'))
    assert run(["predict", "--snapshot", str(path)]) == EXIT_DATA


def test_bad_state_is_a_data_error(corpus, tmp_path, monkeypatch):
    path = tmp_path / "model.snap"
    assert run(["train", str(corpus), "--model", "knn-exact", "--snapshot", str(path)]) == EXIT_OK
    monkeypatch.setattr("sys.stdin", io.StringIO('{"hyps": []}'))
    assert run(["predict", "--snapshot", str(path)]) == EXIT_DATA
