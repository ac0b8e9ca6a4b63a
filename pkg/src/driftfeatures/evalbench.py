"""
Scoring and the repeated generate, sample, analyze, score benchmark.
"""

from __future__ import annotations

import json
import time as _time
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .core import AnalysisReport, Dataset, FeatureCategory
from .forest import ForestConfig
from .independence import CondTestConfig, HsicConfig
from .relevance import analyze_relevance_bounds
from .statistical import analyze_statistical
from .synth import NetworkSpec, generate_network, sample

METHODS = ("statistical", "relevance-bounds")
CODES = ("I", "F", "N")

# Six count mixes (I, F, N) over 25 features.
TABLE1_COUNTS = ((5, 15, 5), (7, 13, 5), (6, 11, 8), (6, 14, 5), (6, 8, 11), (6, 7, 12))
TABLE1_EDGE_PROB = 0.07
TABLE1_MAX_ATTEMPTS = 100_000


def table1_specs(seed: int = 0, n_samples: int = 10_000) -> list[NetworkSpec]:
    """The built-in six-row preset."""
    return [
        NetworkSpec(25, edge_prob=TABLE1_EDGE_PROB, n_samples=n_samples, seed=seed, target_counts=c,
                    max_attempts=TABLE1_MAX_ATTEMPTS)
        for c in TABLE1_COUNTS
    ]


@dataclass(frozen=True)
class Scores:
    f1: dict[str, float]
    micro: float

    def to_dict(self) -> dict[str, Any]:
        return {"f1": dict(self.f1), "micro": self.micro}


def _as_codes(cats: Mapping[str, Any]) -> dict[str, str]:
    return {k: FeatureCategory.parse(v).value for k, v in cats.items()}


def score(predicted: Mapping[str, Any], truth: Mapping[str, Any]) -> Scores:
    """One-vs-rest F1 per category and micro-F1.

    A category absent from both truth and prediction scores 1.0; one that is
    predicted but absent from the truth scores 0.0.

    Raises
    ------
    ValueError
        If the two mappings cover different feature names.
    """
    pred, true = _as_codes(predicted), _as_codes(truth)
    if set(pred) != set(true):
        diff = sorted(set(pred) ^ set(true))
        raise ValueError(f"feature names differ between prediction and truth: {diff}")
    if not true:
        raise ValueError("no features to score")
    names = sorted(true)
    f1 = {}
    for c in CODES:
        tp = sum(pred[n] == c and true[n] == c for n in names)
        fp = sum(pred[n] == c and true[n] != c for n in names)
        fn = sum(pred[n] != c and true[n] == c for n in names)
        f1[c] = 1.0 if tp + fp + fn == 0 else 2 * tp / (2 * tp + fp + fn)
    micro = sum(pred[n] == true[n] for n in names) / len(names)
    return Scores(f1, micro)


def score_report(report: AnalysisReport, truth: Mapping[str, Any]) -> Scores:
    return score({f.name: f.category for f in report.features}, truth)


def run_method(ds: Dataset, method: str, seed: int = 0, n_jobs: int = 1, alpha: float = 0.01,
               epsilon_mult: float = 2.0) -> AnalysisReport:
    """Run one analyzer with all of its random streams derived from ``seed``."""
    if method == "statistical":
        return analyze_statistical(ds, alpha=alpha, hsic=HsicConfig(null="gamma", seed=seed),
                                   cond=CondTestConfig(seed=seed, forest=ForestConfig(seed=seed)), n_jobs=n_jobs)
    if method == "relevance-bounds":
        return analyze_relevance_bounds(ds, ForestConfig(seed=seed, n_jobs=n_jobs), epsilon_mult=epsilon_mult)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


@dataclass
class BenchmarkRow:
    """Aggregated scores of one method on one spec over repeated runs."""

    spec: NetworkSpec
    method: str
    runs: int
    f1: dict[str, float]
    f1_std: dict[str, float]
    micro: float
    micro_std: float
    runtime_mean_s: float
    runtime_std: float
    accuracy: float | None = None
    accuracy_std: float | None = None
    per_run: list[dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        counts = self.spec.target_counts
        spec = dict(zip(CODES, counts)) if counts else {"d": self.spec.d}
        spec["seed"] = self.spec.seed
        out = {
            "spec": spec,
            "method": self.method,
            "runs": self.runs,
            "f1": self.f1,
            "f1_std": self.f1_std,
            "micro": self.micro,
            "micro_std": self.micro_std,
            "runtime_mean_s": self.runtime_mean_s,
            "runtime_std": self.runtime_std,
        }
        if self.accuracy is not None:
            out["accuracy"] = self.accuracy
            out["accuracy_std"] = self.accuracy_std
        return out


def _std(x: Sequence[float]) -> float:
    return float(np.std(x, ddof=1)) if len(x) > 1 else 0.0


def run_seeds(master: int, spec_index: int, runs: int) -> list[int]:
    """Distinct per-run seeds derived from the master seed."""
    ss = np.random.SeedSequence([int(master), int(spec_index)])
    return [int(s.generate_state(1)[0]) for s in ss.spawn(runs)]


def benchmark(specs: Iterable[NetworkSpec], methods: Sequence[str] = METHODS, runs: int = 10, seed: int = 0,
              n_jobs: int = 1, log=None) -> list[BenchmarkRow]:
    """Repeat generate, sample, analyze and score for every spec and method.

    Every run draws a fresh network and sample; all methods see the same
    datasets. Standard deviations use ``runs - 1`` as divisor.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; expected one of {METHODS}")
    rows = []
    for si, spec in enumerate(specs):
        per: dict[str, list[dict[str, Any]]] = {m: [] for m in methods}
        for r, s in enumerate(run_seeds(seed, si, runs)):
            net = generate_network(replace(spec, seed=s))
            smp = sample(net, spec.n_samples, s)
            for m in methods:
                started = _time.perf_counter()
                rep = run_method(smp.dataset, m, s, n_jobs)
                elapsed = _time.perf_counter() - started
                sc = score_report(rep, smp.labels)
                rec = {"seed": s, "f1": sc.f1, "micro": sc.micro, "runtime_s": elapsed,
                       "accuracy": rep.summary.get("accuracy_cv_r2")}
                per[m].append(rec)
                if log:
                    log(f"spec {si} run {r} {m}: micro {sc.micro:.3f} ({elapsed:.1f} s)")
        for m in methods:
            recs = per[m]
            acc = [x["accuracy"] for x in recs] if m == "relevance-bounds" else None
            rows.append(BenchmarkRow(
                spec, m, runs,
                {c: float(np.mean([x["f1"][c] for x in recs])) for c in CODES},
                {c: _std([x["f1"][c] for x in recs]) for c in CODES},
                float(np.mean([x["micro"] for x in recs])), _std([x["micro"] for x in recs]),
                float(np.mean([x["runtime_s"] for x in recs])), _std([x["runtime_s"] for x in recs]),
                float(np.mean(acc)) if acc else None, _std(acc) if acc else None,
                recs,
            ))
    return rows


def format_table(rows: Sequence[BenchmarkRow]) -> str:
    """Aligned text table: counts, then per method F1_N/F/I, micro, accuracy, time."""
    head = ["I", "F", "N", "method", "F1_N", "F1_F", "F1_I", "micro", "micro_std", "accuracy", "time_s"]
    body = []
    for r in rows:
        c = r.spec.target_counts or ("-", "-", "-")
        body.append([str(c[0]), str(c[1]), str(c[2]), r.method,
                     f"{r.f1['N']:.2f}", f"{r.f1['F']:.2f}", f"{r.f1['I']:.2f}",
                     f"{r.micro:.2f}", f"{r.micro_std:.3f}",
                     "-" if r.accuracy is None else f"{r.accuracy:.2f}", f"{r.runtime_mean_s:.1f}"])
    widths = [max(len(h), *(len(b[i]) for b in body)) if body else len(h) for i, h in enumerate(head)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(head, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(v.rjust(w) for v, w in zip(b, widths)) for b in body]
    return "\n".join(lines)


def rows_to_json(rows: Sequence[BenchmarkRow]) -> str:
    return json.dumps([r.to_dict() for r in rows], indent=2)
