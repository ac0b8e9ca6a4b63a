import json
import subprocess
import sys

import pytest

from driftfeatures.cli import main
from driftfeatures.core import load_labels


def run(*argv):
    return main([str(a) for a in argv])


def test_help_exits_zero():
    proc = subprocess.run([sys.executable, "-m", "driftfeatures", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "generate" in proc.stdout
    for cmd in ("generate", "analyze", "benchmark", "evaluate"):
        assert run(cmd, "--help") == 0


def test_generate_table_row(tmp_path):
    prefix = tmp_path / "b"
    assert run("generate", "--features", 25, "--counts", "5,15,5", "--samples", 10000, "--out-prefix", prefix) == 0
    labels = load_labels(tmp_path / "b_labels.json")
    codes = [c.value for c in labels.values()]
    assert (codes.count("I"), codes.count("F"), codes.count("N")) == (5, 15, 5)
    assert (tmp_path / "b.csv").is_file() and (tmp_path / "b_network.json").is_file()


def test_generate_isolated(tmp_path):
    assert run("generate", "--features", 1, "--edge-prob", 0, "--samples", 50, "--out-prefix", tmp_path / "x") == 0
    assert json.loads((tmp_path / "x_labels.json").read_text()) == {"X1": "N"}


def test_generate_bad_counts(tmp_path, capsys):
    assert run("generate", "--features", 25, "--counts", "9,9,9", "--out-prefix", tmp_path / "x") == 2
    assert "sum" in capsys.readouterr().err


def test_generate_unwritable(tmp_path):
    assert run("generate", "--features", 2, "--samples", 20, "--out-prefix", tmp_path / "missing" / "x") == 1


@pytest.fixture
def small_bench(tmp_path):
    prefix = tmp_path / "s"
    assert run("generate", "--features", 4, "--edge-prob", 0.6, "--samples", 600, "--seed", 3, "--out-prefix", prefix) == 0
    return tmp_path


@pytest.mark.parametrize("method", ["statistical", "relevance-bounds"])
def test_analyze_and_evaluate(small_bench, method, capsys):
    report = small_bench / f"{method}.json"
    assert run("analyze", "--input", small_bench / "s.csv", "--time-column", "time", "--method", method,
               "--threads", 1, "--out", report) == 0
    data = json.loads(report.read_text())
    assert data["method"] == method and len(data["features"]) == 4
    capsys.readouterr()
    assert run("evaluate", "--report", report, "--labels", small_bench / "s_labels.json") == 0
    scores = json.loads(capsys.readouterr().out)
    assert set(scores) == {"f1", "micro"} and 0 <= scores["micro"] <= 1


def test_analyze_deterministic(small_bench):
    outs = []
    for k in range(2):
        out = small_bench / f"r{k}.json"
        assert run("analyze", "--input", small_bench / "s.csv", "--time-column", "time", "--seed", 4,
                   "--threads", 1 + k, "--out", out) == 0
        outs.append(json.loads(out.read_text())["features"])
    assert outs[0] == outs[1]


def test_analyze_usage_errors(small_bench):
    assert run("analyze", "--input", small_bench / "s.csv", "--method", "bogus") == 2
    assert run("analyze", "--input", small_bench / "s.csv", "--alpha", 2) == 2
    assert run("analyze", "--input", small_bench / "nope.csv") == 1
    assert run("analyze", "--input", small_bench / "s.csv", "--time-column", "nope") == 1


def _write_report(path, cats):
    path.write_text(json.dumps({
        "method": "statistical", "runtime_seconds": 1.0, "config": {},
        "features": [{"name": k, "category": v, "evidence": {}} for k, v in cats.items()],
    }))


def test_evaluate_cases(tmp_path, capsys):
    (tmp_path / "l.json").write_text(json.dumps({"a": "I", "b": "F", "c": "N"}))
    _write_report(tmp_path / "same.json", {"a": "I", "b": "F", "c": "N"})
    assert run("evaluate", "--report", tmp_path / "same.json", "--labels", tmp_path / "l.json") == 0
    assert json.loads(capsys.readouterr().out) == {"f1": {"I": 1.0, "F": 1.0, "N": 1.0}, "micro": 1.0}
    _write_report(tmp_path / "swap.json", {"a": "I", "b": "N", "c": "F"})
    assert run("evaluate", "--report", tmp_path / "swap.json", "--labels", tmp_path / "l.json") == 0
    assert json.loads(capsys.readouterr().out)["micro"] == pytest.approx(1 / 3)
    _write_report(tmp_path / "other.json", {"a": "I", "x": "N", "y": "N"})
    assert run("evaluate", "--report", tmp_path / "other.json", "--labels", tmp_path / "l.json") == 1
    err = capsys.readouterr().err
    assert all(name in err for name in ("'b'", "'c'", "'x'", "'y'"))


def test_benchmark_cli(tmp_path, capsys):
    specs = tmp_path / "specs.json"
    specs.write_text(json.dumps([{"d": 3, "edge_prob": 0.5, "n_samples": 300}]))
    outs = []
    for k in range(2):
        out = tmp_path / f"b{k}.json"
        assert run("benchmark", "--specs", specs, "--runs", 2, "--methods", "relevance-bounds", "--seed", 9,
                   "--out", out) == 0
        rows = json.loads(out.read_text())
        outs.append([{k: v for k, v in r.items() if not k.startswith("runtime")} for r in rows])
    assert outs[0] == outs[1] and len(outs[0]) == 1
    assert "relevance-bounds" in capsys.readouterr().out
    assert run("benchmark", "--table1", "--runs", 0) == 2
    assert run("benchmark", "--table1", "--methods", "bogus") == 2
    assert run("benchmark", "--runs", 1) == 2  # neither --specs nor --table1


def test_threads_env(monkeypatch):
    from driftfeatures.cli import _default_threads

    monkeypatch.setenv("DFA_THREADS", "3")
    assert _default_threads() == 3
