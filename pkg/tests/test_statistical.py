import numpy as np
import pytest

from driftfeatures.core import DataError, Dataset, FeatureCategory, equidistant_time
from driftfeatures.independence import CondTestConfig, HsicConfig
from driftfeatures.statistical import (
    analyze_statistical,
    build_graph,
    classify,
    classify_from_pvalues,
    drifting_set,
    graph_from_pvalues,
)

I, F, N = FeatureCategory.DRIFT_INDUCING, FeatureCategory.FAITHFULLY_DRIFTING, FeatureCategory.NON_DRIFTING


def chain(n, seed, noise=0.1):
    rng = np.random.default_rng(seed)
    t = equidistant_time(n)
    x1 = t + noise * rng.standard_normal(n)
    x2 = x1 + noise * rng.standard_normal(n)
    x3 = rng.standard_normal(n)
    return Dataset(("X1", "X2", "X3"), np.column_stack([x1, x2, x3]), t)


def test_graph_from_pvalues_tie_is_rejection():
    # one test: Holm leaves p unchanged, p == alpha is an edge
    g = graph_from_pvalues(["time", "a"], {(0, 1): 0.01}, 0.01)
    assert g.has_edge(0, 1)
    # Holm: 3 * 0.003 = 0.009 <= 0.01; 2 * 0.02 = 0.04; 0.5
    g = graph_from_pvalues(["time", "a", "b"], {(0, 1): 0.003, (1, 2): 0.02, (0, 2): 0.5}, 0.01)
    assert g.edges == {(0, 1)}
    assert g.tests[(0, 1)] == (0.003, pytest.approx(0.009))
    assert g.tests[(1, 2)][1] == pytest.approx(0.04)
    with pytest.raises(ValueError):
        graph_from_pvalues(["a"], {(0, 0): 0.0}, 0.01)
    with pytest.raises(ValueError):
        graph_from_pvalues(["a", "b"], {(0, 1): 0.0}, 1.5)


def test_drifting_set_examples():
    nodes = ["time", "X1", "X2", "X3"]
    assert drifting_set(graph_from_pvalues(nodes, {(0, 1): 1.0}, 0.01)) == set()
    g = graph_from_pvalues(nodes, {(0, 1): 0.0, (1, 2): 0.0, (0, 3): 1.0, (2, 3): 1.0}, 0.01)
    assert drifting_set(g) == {0, 1}


def _has_path(g, i):
    seen, todo = {0}, [0]
    while todo:
        v = todo.pop()
        for a, b in g.edges:
            for u, w in ((a, b), (b, a)):
                if u == v and w not in seen:
                    seen.add(w)
                    todo.append(w)
    return i + 1 in seen


@pytest.mark.parametrize("seed", range(4))
def test_drifting_features_have_paths(seed):
    rng = np.random.default_rng(seed)
    k = 7
    pv = {(a, b): float(rng.random()) ** 4 for a in range(k) for b in range(a + 1, k)}
    g = graph_from_pvalues(["time"] + [f"X{i}" for i in range(1, k)], pv, 0.05)
    for i in drifting_set(g):
        assert _has_path(g, i)
    for i in set(range(k - 1)) - drifting_set(g):
        assert not _has_path(g, i)


def test_classify_from_pvalues_partition():
    out = classify_from_pvalues(5, {1, 3}, lambda i, rest: 0.0 if i == 1 else 0.5, 0.01)
    assert [out[i][0] for i in range(5)] == [N, I, N, F, N]
    assert classify_from_pvalues(3, set(), lambda i, r: 0.0, 0.01) == {i: (N, None, None) for i in range(3)}


def test_graph_null_empty():
    empty = 0
    for i in range(10):
        rng = np.random.default_rng([50, i])
        ds = Dataset(tuple("abcd"), rng.standard_normal((600, 4)), rng.permutation(equidistant_time(600)))
        empty += not build_graph(ds, 0.01, HsicConfig(null="gamma", seed=i)).edges
    assert empty >= 9


def test_graph_chain():
    ok = 0
    for i in range(10):
        g = build_graph(chain(2000, i), 0.01, HsicConfig(null="gamma", seed=i))
        ok += g.has_edge(0, 1) and g.has_edge(1, 2) and g.degree(3) == 0
    assert ok >= 9


def test_graph_identity():
    t = equidistant_time(100)
    g = build_graph(Dataset(("X1",), t[:, None], t))
    assert g.edges == {(0, 1)}


def test_graph_permutation_null_is_total():
    # permutation null works too; degenerate columns become isolated nodes
    t = equidistant_time(200)
    ds = Dataset(("X1", "X2"), np.column_stack([t ** 2, np.ones(200)]), t)
    g = build_graph(ds, 0.05, HsicConfig(permutations=100))
    assert g.has_edge(0, 1) and g.degree(2) == 0


def test_graph_thread_independent():
    ds = chain(800, 3)
    a = build_graph(ds, 0.01, HsicConfig(null="gamma"), n_jobs=1)
    b = build_graph(ds, 0.01, HsicConfig(null="gamma"), n_jobs=4)
    assert a.tests == b.tests
    a = build_graph(ds, 0.01, HsicConfig(permutations=100), n_jobs=1)
    b = build_graph(ds, 0.01, HsicConfig(permutations=100), n_jobs=3)
    assert a.tests == b.tests


@pytest.mark.slow
def test_classify_chain():
    ok = 0
    for i in range(50):
        rep = classify(chain(2000, 100 + i), {0, 1}, 0.01, CondTestConfig(seed=i))
        cats = rep.categories()
        ok += cats["X1"] is I and cats["X2"] is F and cats["X3"] is N
    assert ok >= 40


def test_classify_empty_drifting():
    rep = classify(chain(100, 0), set())
    assert set(rep.categories().values()) == {N}


def test_analyze_toy_chain_report():
    rep = analyze_statistical(chain(2000, 7))
    cats = rep.categories()
    assert cats == {"X1": I, "X2": F, "X3": N}
    for f in rep.features:
        assert set(f.evidence) == {"marginal_p", "graph_degree", "conditional_p"}
    assert rep.runtime_seconds > 0
    assert set(rep.indices("I")) <= set(rep.summary["drifting"])
    again = analyze_statistical(chain(2000, 7))
    assert again.to_dict()["features"] == rep.to_dict()["features"]
    par = analyze_statistical(chain(2000, 7), n_jobs=3)
    assert par.to_dict()["features"] == rep.to_dict()["features"]


def test_constant_time_rejected():
    ds = Dataset(("a",), np.arange(10.0)[:, None], np.zeros(10))
    with pytest.raises(DataError, match="time constant"):
        analyze_statistical(ds)
