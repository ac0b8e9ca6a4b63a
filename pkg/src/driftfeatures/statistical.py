"""
Statistical drifting-feature analysis.

Time and the features form the nodes of a dependence graph whose edges come
from Holm-corrected pairwise HSIC tests. Features in the connected component
of time are drifting. A drifting feature is drift inducing when time still
depends on it given the other drifting features, and faithfully drifting
otherwise.
"""

from __future__ import annotations

import time as _time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .core import AnalysisReport, Dataset, FeatureCategory, FeatureRecord, standardize
from .independence import (
    CondTestConfig,
    HsicConfig,
    conditional_test,
    holm,
    hsic_test_prepared,
    prepare_side,
    subsample_rows,
)

TIME_NODE = "time"


@dataclass
class DependencyGraph:
    """Undirected dependence graph over ``time`` (node 0) and the features.

    ``tests`` maps every tested pair ``(a, b)`` with ``a < b`` to
    ``(raw_p, corrected_p)``; ``edges`` holds the pairs whose corrected
    p-value is at most ``alpha``.
    """

    nodes: tuple[str, ...]
    alpha: float
    tests: dict[tuple[int, int], tuple[float, float]]
    edges: frozenset[tuple[int, int]] = field(init=False)

    def __post_init__(self):
        self.edges = frozenset(pair for pair, (_, pc) in self.tests.items() if pc <= self.alpha)

    def degree(self, node: int) -> int:
        return sum(node in e for e in self.edges)

    def has_edge(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.edges

    def feature_edges(self) -> set[tuple[str, str]]:
        return {(self.nodes[a], self.nodes[b]) for a, b in self.edges}


def graph_from_pvalues(nodes: Iterable[str], pvalues: Mapping[tuple[int, int], float], alpha: float) -> DependencyGraph:
    """Holm-correct a family of pairwise p-values and keep the rejections."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    pairs = sorted((min(a, b), max(a, b)) for a, b in pvalues)
    if any(a == b for a, b in pairs):
        raise ValueError("self-pairs are not allowed")
    raw = np.array([pvalues[p] if p in pvalues else pvalues[p[::-1]] for p in pairs], dtype=float)
    corrected = holm(raw)
    tests = {p: (float(r), float(c)) for p, r, c in zip(pairs, raw, corrected)}
    return DependencyGraph(tuple(nodes), alpha, tests)


def build_graph(ds: Dataset, alpha: float = 0.01, cfg: HsicConfig = HsicConfig(null="gamma"), n_jobs: int = 1) -> DependencyGraph:
    """All ``(d + 1) d / 2`` pairwise HSIC tests over time and the features.

    Every test uses the same subsampled rows; each pair draws its
    permutations from its own stream, so the result does not depend on
    ``n_jobs``.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    rows = subsample_rows(ds.n, cfg, "graph")
    columns = [ds.time] + [ds.values[:, j] for j in range(ds.d)]
    sides = [prepare_side(c, rows, cfg) for c in columns]
    pairs = [(a, b) for a in range(len(columns)) for b in range(a + 1, len(columns))]

    def run(pair):
        a, b = pair
        return hsic_test_prepared(sides[a], sides[b], cfg, key=("pair", a, b)).p_value

    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as ex:
            pv = list(ex.map(run, pairs))
    else:
        pv = [run(p) for p in pairs]
    return graph_from_pvalues((TIME_NODE,) + ds.names, dict(zip(pairs, pv)), alpha)


def drifting_set(g: DependencyGraph) -> set[int]:
    """Feature indices (0-based) in the connected component of time."""
    k = len(g.nodes)
    if not g.edges:
        return set()
    a, b = zip(*g.edges)
    adj = coo_matrix((np.ones(len(a)), (a, b)), shape=(k, k))
    _, label = connected_components(adj, directed=False)
    return {int(v) - 1 for v in np.flatnonzero(label == label[0]) if v != 0}


def classify_from_pvalues(d: int, drifting: Iterable[int], cond_pvalue: Callable[[int, list[int]], float],
                          alpha: float) -> dict[int, tuple[FeatureCategory, float | None, float | None]]:
    """Split drifting features into inducing and faithful ones.

    ``cond_pvalue(i, rest)`` is the p-value for "time independent of X_i
    given X_rest". Holm correction runs over this family. Returns
    ``i -> (category, raw_p, corrected_p)`` for every feature.
    """
    drifting = sorted(set(drifting))
    out: dict[int, tuple[FeatureCategory, float | None, float | None]] = {
        i: (FeatureCategory.NON_DRIFTING, None, None) for i in range(d)
    }
    if not drifting:
        return out
    raw = np.array([cond_pvalue(i, [j for j in drifting if j != i]) for i in drifting], dtype=float)
    corrected = holm(raw)
    for i, r, c in zip(drifting, raw, corrected):
        cat = FeatureCategory.DRIFT_INDUCING if c <= alpha else FeatureCategory.FAITHFULLY_DRIFTING
        out[i] = (cat, float(r), float(c))
    return out


def classify(ds: Dataset, drifting: Iterable[int], alpha: float = 0.01, cfg: CondTestConfig = CondTestConfig(),
             n_jobs: int = 1) -> AnalysisReport:
    """Conditional stage on its own; the report carries no graph evidence."""
    started = _time.perf_counter()
    drifting = sorted(set(drifting))
    if any(not 0 <= i < ds.d for i in drifting):
        raise ValueError("drifting set refers to unknown features")
    results = _conditional_stage(ds, drifting, alpha, cfg, n_jobs)
    records = [
        FeatureRecord(ds.names[i], cat, {"marginal_p": None, "graph_degree": None, "conditional_p": cp})
        for i, (cat, _, cp) in sorted(results.items())
    ]
    return AnalysisReport("statistical", records, _time.perf_counter() - started, {"alpha": alpha, "cond": asdict(cfg)})


def _conditional_stage(ds: Dataset, drifting: list[int], alpha: float, cfg: CondTestConfig, n_jobs: int):
    pv: dict[int, float] = {}

    def run(i):
        rest = [j for j in drifting if j != i]
        return conditional_test(ds.time, ds.values[:, i], ds.values[:, rest], cfg, key=("cond", i)).p_value

    if n_jobs > 1 and len(drifting) > 1:
        with ThreadPoolExecutor(n_jobs) as ex:
            pv = dict(zip(drifting, ex.map(run, drifting)))
    else:
        pv = {i: run(i) for i in drifting}
    return classify_from_pvalues(ds.d, drifting, lambda i, rest: pv[i], alpha)


def analyze_statistical(ds: Dataset, alpha: float = 0.01, hsic: HsicConfig = HsicConfig(null="gamma"),
                        cond: CondTestConfig = CondTestConfig(), scale: bool = True, n_jobs: int = 1) -> AnalysisReport:
    """End-to-end statistical analysis of one dataset.

    Parameters
    ----------
    ds : Dataset
    alpha : float
        Level of both Holm families (graph edges and conditional tests).
    hsic, cond : configs for the two test families.
    scale : bool
        Standardize the features first.
    n_jobs : int
        Worker threads for the test batteries.
    """
    started = _time.perf_counter()
    ds.require_time_varies()
    work = standardize(ds) if scale else ds
    graph = build_graph(work, alpha, hsic, n_jobs)
    drifting = sorted(drifting_set(graph))
    results = _conditional_stage(work, drifting, alpha, cond, n_jobs)
    records = []
    for i, name in enumerate(ds.names):
        cat, _, cp = results[i]
        tp = graph.tests.get((0, i + 1))
        records.append(FeatureRecord(name, cat, {
            "marginal_p": tp[1] if tp else None,
            "graph_degree": float(graph.degree(i + 1)),
            "conditional_p": cp,
        }))
    config = {"alpha": alpha, "standardize": scale, "hsic": asdict(hsic), "cond": asdict(cond)}
    summary = {
        "drifting": drifting,
        "edges": sorted([list(e) for e in graph.edges]),
        "n_rows": ds.n,
    }
    return AnalysisReport("statistical", records, _time.perf_counter() - started, config, summary)
