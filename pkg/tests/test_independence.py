import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from driftfeatures.forest import ForestConfig
from driftfeatures.independence import (
    DEGENERATE,
    DEGENERATE_TARGET,
    CondTestConfig,
    HsicConfig,
    conditional_test,
    holm,
    hsic_statistic,
    hsic_test,
)


def naive_hsic(x, y):
    """Direct O(n^2) evaluation of tr(K H L H) / (n - 1)^2 with explicit loops."""
    n = len(x)

    def gram(v):
        dists = [abs(v[i] - v[j]) for i in range(n) for j in range(i + 1, n)]
        dists = [d for d in dists if d > 0]
        sigma = float(np.median(dists))
        K = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                K[i, j] = np.exp(-((v[i] - v[j]) ** 2) / (2 * sigma * sigma))
        return K

    K, L = gram(x), gram(y)
    H = np.eye(n) - 1.0 / n
    Kc = H @ K @ H
    total = 0.0
    for i in range(n):
        for j in range(n):
            total += Kc[i, j] * L[j, i]
    return max(total / (n - 1) ** 2, 0.0)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_statistic_matches_naive_oracle(seed):
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal(500), rng.standard_normal(500)
    assert abs(hsic_statistic(x, y) - naive_hsic(x, y)) <= 1e-10


def test_statistic_matches_oracle_on_dependent_data():
    rng = np.random.default_rng(7)
    x = rng.standard_normal(200)
    y = np.sin(3 * x) + 0.1 * rng.standard_normal(200)
    assert abs(hsic_statistic(x, y) - naive_hsic(x, y)) <= 1e-10


def test_perfect_dependence_positive():
    x = np.arange(1.0, 51.0)
    x = (x - x.mean()) / x.std(ddof=1)
    assert hsic_statistic(x, x) > 0


def test_constant_input():
    rng = np.random.default_rng(0)
    y = rng.standard_normal(40)
    assert hsic_statistic(np.full(40, 3.0), y) == 0.0
    r = hsic_test(y, np.zeros(40), HsicConfig(permutations=100))
    assert (r.statistic, r.p_value, r.method) == (0.0, 1.0, DEGENERATE)


def test_small_n_and_shape_errors():
    with pytest.raises(ValueError):
        hsic_statistic(np.arange(3.0), np.arange(3.0))
    with pytest.raises(ValueError):
        hsic_statistic(np.arange(5.0), np.arange(6.0))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(4, 60))
def test_symmetry_exact(seed, n):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, 2))
    y = rng.standard_normal(n) + x[:, 0]
    assert hsic_statistic(x, y) == hsic_statistic(y, x)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_row_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(80)
    y = x ** 2 + rng.standard_normal(80)
    perm = rng.permutation(80)
    a, b = hsic_statistic(x, y), hsic_statistic(x[perm], y[perm])
    assert abs(a - b) <= 1e-12 * max(1.0, abs(a))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([100, 137, 250]))
def test_pvalue_lattice(seed, B):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(60)
    y = rng.standard_normal(60) + rng.uniform(0, 2) * x
    r = hsic_test(x, y, HsicConfig(permutations=B, seed=seed))
    k = r.p_value * (B + 1)
    assert 1 / (B + 1) <= r.p_value <= 1.0
    assert abs(k - round(k)) < 1e-9
    assert r.permutations_or_folds == B and r.n_used == 60 and np.isfinite(r.statistic)


def test_determinism():
    rng = np.random.default_rng(3)
    x, y = rng.standard_normal(200), rng.standard_normal(200)
    cfg = HsicConfig(permutations=100, seed=11)
    assert hsic_test(x, y, cfg) == hsic_test(x, y, cfg)


def test_subsample_cap():
    rng = np.random.default_rng(4)
    x = rng.standard_normal(3000)
    r = hsic_test(x, x + rng.standard_normal(3000), HsicConfig(permutations=100, subsample_cap=500))
    assert r.n_used == 500
    assert r.p_value == 1 / 101


@pytest.mark.parametrize("kw", [{"permutations": 99}, {"subsample_cap": 49}])
def test_config_invariants(kw):
    with pytest.raises(ValueError):
        HsicConfig(**kw)


def test_cond_config_invariants():
    with pytest.raises(ValueError):
        CondTestConfig(folds=1)


def _rejection_rate(alpha_levels, n, trials, null):
    rej = {a: 0 for a in alpha_levels}
    for i in range(trials):
        rng = np.random.default_rng([2024, i])
        x, y = rng.standard_normal(n), rng.standard_normal(n)
        p = hsic_test(x, y, HsicConfig(null=null, seed=i), key=("trial", i)).p_value
        for a in alpha_levels:
            rej[a] += p <= a
    return {a: r / trials for a, r in rej.items()}


@pytest.mark.slow
def test_permutation_calibration():
    rates = _rejection_rate([0.01, 0.05], 300, 500, "permutation")
    for a, r in rates.items():
        assert abs(r - a) <= 0.02, (a, r)


def test_gamma_calibration():
    rates = _rejection_rate([0.05], 300, 300, "gamma")
    assert abs(rates[0.05] - 0.05) <= 0.03


@pytest.mark.slow
def test_power():
    hits = 0
    for i in range(100):
        rng = np.random.default_rng([99, i])
        x = rng.standard_normal(500)
        y = x + 0.1 * rng.standard_normal(500)
        hits += hsic_test(x, y, HsicConfig(seed=i)).p_value <= 0.01
    assert hits >= 95


def test_holm_hand_computed():
    # sorted .01, .03, .04 -> 3*.01, max(.03, 2*.03), max(.06, .04)
    np.testing.assert_allclose(holm([0.01, 0.04, 0.03]), [0.03, 0.06, 0.06])
    np.testing.assert_allclose(holm([0.5, 0.9]), [1.0, 1.0])
    assert holm([]).size == 0


def test_conditional_empty_z_equals_hsic():
    rng = np.random.default_rng(5)
    t = np.linspace(0, 1, 300)
    xi = t + rng.standard_normal(300)
    cfg = CondTestConfig(seed=17, hsic=HsicConfig(permutations=200))
    a = conditional_test(t, xi, None, cfg, key=("k",))
    b = hsic_test(t, xi, HsicConfig(permutations=200, seed=17), key=("k",))
    assert a == b
    assert conditional_test(t, xi, np.empty((300, 0)), cfg, key=("k",)) == b


def test_conditional_empty_z_dependent():
    rng = np.random.default_rng(6)
    xi = rng.standard_normal(400)
    t = xi + rng.standard_normal(400)
    assert conditional_test(t, xi).p_value <= 0.01


def test_conditional_degenerate_target_and_small_n():
    rng = np.random.default_rng(0)
    z = rng.standard_normal((100, 1))
    r = conditional_test(np.ones(100), z[:, 0] ** 2, z)
    assert (r.p_value, r.method) == (1.0, DEGENERATE_TARGET)
    with pytest.raises(ValueError):
        conditional_test(np.arange(20.0), np.arange(20.0), np.ones((20, 1)))


_FAST = CondTestConfig(forest=ForestConfig(n_trees=50))


@pytest.mark.slow
def test_conditional_redundant_feature():
    accepted = 0
    for i in range(50):
        rng = np.random.default_rng([31, i])
        z = rng.standard_normal(500)
        t = z + 0.5 * rng.standard_normal(500)
        r = conditional_test(t, z.copy(), z[:, None], CondTestConfig(seed=i))
        accepted += r.p_value > 0.05
        assert 0 <= r.p_value <= 1 and r.method == "forest-permutation"
    assert accepted >= 45


@pytest.mark.slow
def test_conditional_interaction():
    rejected = 0
    for i in range(50):
        rng = np.random.default_rng([32, i])
        z, xi = rng.standard_normal(2000), rng.standard_normal(2000)
        t = z * xi + 0.5 * rng.standard_normal(2000)
        rejected += conditional_test(t, xi, z[:, None], CondTestConfig(seed=i)).p_value <= 0.05
    assert rejected >= 40


def test_conditional_deterministic():
    rng = np.random.default_rng(8)
    z, xi = rng.standard_normal(300), rng.standard_normal(300)
    t = z + xi
    a = conditional_test(t, xi, z[:, None], _FAST, key=(1,))
    assert a == conditional_test(t, xi, z[:, None], _FAST, key=(1,))
    assert a.p_value < 0.01
