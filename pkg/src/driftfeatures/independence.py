"""
Unconditional and conditional independence tests.

``hsic_test`` is a permutation test on the biased HSIC statistic with RBF
kernels and median-heuristic bandwidths. ``conditional_test`` compares the
held-out errors of forests that see a candidate column against forests that
see a shuffled copy of it.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import stats
from statsmodels.stats.multitest import multipletests

from .forest import ForestConfig, fit, kfold_indices

DEGENERATE = "degenerate"
DEGENERATE_TARGET = "degenerate-target"


class DegenerateInputError(ValueError):
    pass


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    n_used: int
    method: str
    permutations_or_folds: int

    __test__ = False  # keep pytest from collecting this class

    def rejects(self, alpha: float) -> bool:
        return self.p_value <= alpha


@dataclass(frozen=True)
class HsicConfig:
    permutations: int = 500
    subsample_cap: int = 2000
    bandwidth_rows: int = 1000
    seed: int = 0
    rank_tol: float = 1e-12
    null: str = "permutation"  # or "gamma"

    def __post_init__(self):
        if self.null not in ("permutation", "gamma"):
            raise ValueError(f"unknown HSIC null distribution {self.null!r}")
        if self.permutations < 100:
            raise ValueError("HSIC needs at least 100 permutations")
        if self.subsample_cap < 50:
            raise ValueError("subsample_cap must be >= 50")


@dataclass(frozen=True)
class CondTestConfig:
    folds: int = 5
    repeats: int = 10
    subsample_cap: int = 2000
    seed: int = 0
    forest: ForestConfig = field(default_factory=ForestConfig)
    hsic: HsicConfig = field(default_factory=HsicConfig)

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("need at least 2 folds")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")


def stream(seed: int, *key) -> np.random.Generator:
    """Random generator for ``(seed, key...)``; keys may be ints or strings."""
    parts = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    for k in key:
        if isinstance(k, str):
            parts.append(zlib.crc32(k.encode()))
        else:
            parts.append(int(k))
    return np.random.default_rng(parts)


def _as_2d(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    return a


def _is_constant(a: np.ndarray) -> bool:
    return bool(np.all(a == a[0]))


def median_bandwidth(x: np.ndarray, rows: np.ndarray | None = None) -> float:
    """Median of the nonzero pairwise Euclidean distances among ``rows``."""
    x = _as_2d(x)
    if rows is not None:
        x = x[rows]
    sq = np.sum(x * x, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    iu = np.triu_indices(x.shape[0], k=1)
    dist = np.sqrt(np.maximum(d2[iu], 0.0))
    dist = dist[dist > 0]
    if dist.size == 0:
        raise DegenerateInputError("all pairwise distances are zero; bandwidth undefined")
    return float(np.median(dist))


def _bandwidth_rows(n: int, cfg: HsicConfig) -> np.ndarray | None:
    if n <= cfg.bandwidth_rows:
        return None
    return np.sort(stream(cfg.seed, "bandwidth", n).choice(n, cfg.bandwidth_rows, replace=False))


def _rbf_rows(x: np.ndarray, rows: slice | np.ndarray, sigma: float) -> np.ndarray:
    a = x[rows]
    d2 = np.sum(a * a, 1)[:, None] + np.sum(x * x, 1)[None, :] - 2.0 * (a @ x.T)
    return np.exp(-np.maximum(d2, 0.0) / (2.0 * sigma * sigma))


def hsic_statistic(x, y, cfg: HsicConfig = HsicConfig()) -> float:
    """Biased HSIC estimate ``tr(K H L H) / (n - 1)**2``.

    K and L are RBF Gram matrices with median-heuristic bandwidths. A
    constant argument has a constant Gram matrix, which centers to zero, so
    the result is 0 in that case. The computation runs over row blocks and
    never holds an ``n x n`` matrix.
    """
    x, y = _as_2d(x), _as_2d(y)
    n = x.shape[0]
    if y.shape[0] != n:
        raise ValueError(f"x has {n} rows, y has {y.shape[0]}")
    if n < 4:
        raise ValueError(f"HSIC needs at least 4 rows, got {n}")
    if _is_constant(x) or _is_constant(y):
        return 0.0
    rows = _bandwidth_rows(n, cfg)
    sx, sy = median_bandwidth(x, rows), median_bandwidth(y, rows)
    kl = 0.0
    k1 = np.empty(n)
    l1 = np.empty(n)
    block = max(1, 4_000_000 // n)
    for s in range(0, n, block):
        sl = slice(s, min(n, s + block))
        K = _rbf_rows(x, sl, sx)
        L = _rbf_rows(y, sl, sy)
        kl += float(np.sum(K * L))
        k1[sl] = K.sum(axis=1)
        l1[sl] = L.sum(axis=1)
    # tr(KHLH) = sum(K∘L) - 2/n k1·l1 + (1'K1)(1'L1)/n²
    val = kl - 2.0 / n * float(k1 @ l1) + float(k1.sum()) * float(l1.sum()) / (n * n)
    val /= (n - 1) ** 2
    return max(val, 0.0)


def incomplete_cholesky(x, sigma: float, tol: float = 1e-12, max_rank: int | None = None) -> np.ndarray:
    """Pivoted incomplete Cholesky factor ``G`` with ``G G' ≈ K`` (RBF kernel).

    Stops once the trace of the residual ``K - G G'`` falls below
    ``tol * n``; since the residual is positive semi-definite this bounds
    its Frobenius norm as well.
    """
    x = _as_2d(x)
    n = x.shape[0]
    max_rank = n if max_rank is None else min(max_rank, n)
    G = np.zeros((n, max_rank))
    diag = np.ones(n)  # RBF kernel diagonal
    inv2s2 = 1.0 / (2.0 * sigma * sigma)
    r = 0
    while r < max_rank and diag.sum() > tol * n:
        p = int(np.argmax(diag))
        piv = np.sqrt(diag[p])
        col = np.exp(-np.sum((x - x[p]) ** 2, axis=1) * inv2s2)
        g = (col - G[:, :r] @ G[p, :r]) / piv
        g[p] = piv
        G[:, r] = g
        diag = np.maximum(diag - g * g, 0.0)
        diag[p] = 0.0
        r += 1
    return G[:, :r]


def centered_factor(x, sigma: float, tol: float = 1e-12) -> np.ndarray:
    """Factor ``A`` with ``A A' ≈ H K H``."""
    G = incomplete_cholesky(x, sigma, tol)
    return G - G.mean(axis=0)


def _degenerate(n: int, perms: int) -> TestResult:
    return TestResult(0.0, 1.0, n, DEGENERATE, perms)


@dataclass
class _HsicSide:
    """Subsampled, factored view of one test argument."""

    factor: np.ndarray | None  # centered factor; None marks a constant argument
    rows: np.ndarray
    offdiag_mean: float = 0.0  # mean off-diagonal entry of the uncentered Gram matrix
    _dense: np.ndarray | None = None

    def dense(self) -> np.ndarray:
        """Centered Gram matrix in single precision, built once."""
        if self._dense is None:
            F = self.factor.astype(np.float32)
            self._dense = F @ F.T
        return self._dense


def prepare_side(v, rows: np.ndarray, cfg: HsicConfig) -> _HsicSide:
    v = _as_2d(v)[rows]
    if _is_constant(v):
        return _HsicSide(None, rows)
    n = v.shape[0]
    sigma = median_bandwidth(v, _bandwidth_rows(n, cfg))
    G = incomplete_cholesky(v, sigma, cfg.rank_tol)
    col_sum = G.sum(axis=0)
    offdiag = (float(col_sum @ col_sum) - n) / (n * (n - 1))
    return _HsicSide(G - col_sum / n, rows, offdiag)


def subsample_rows(n: int, cfg: HsicConfig, *key) -> np.ndarray:
    if n <= cfg.subsample_cap:
        return np.arange(n)
    return np.sort(stream(cfg.seed, "subsample", n, *key).choice(n, cfg.subsample_cap, replace=False))


def permutation_pvalue(A: np.ndarray, B: np.ndarray, permutations: int, rng: np.random.Generator,
                       chunk: int = 50) -> tuple[float, float]:
    """Permutation p-value of ``||A' B||_F^2`` against row shuffles of ``B``.

    Returns ``(statistic, p_value)`` with the statistic normalized by
    ``(n - 1)**2``.
    """
    n = A.shape[0]
    observed = float(np.sum((A.T @ B) ** 2))
    base = np.arange(n)
    exceed = 0
    done = 0
    slack = 1e-10 * observed
    while done < permutations:
        m = min(chunk, permutations - done)
        perms = rng.permuted(np.tile(base, (m, 1)), axis=1)
        M = np.matmul(A.T[None, :, :], B[perms])
        vals = np.sum(M * M, axis=(1, 2))
        exceed += int(np.sum(vals >= observed - slack))
        done += m
    return observed / (n - 1) ** 2, (1 + exceed) / (permutations + 1)


def hsic_test(x, y, cfg: HsicConfig = HsicConfig(), key: Sequence = ()) -> TestResult:
    """HSIC permutation test of ``x`` independent of ``y``.

    Rows are subsampled without replacement to ``cfg.subsample_cap``; the
    rows of ``y`` are shuffled ``cfg.permutations`` times. The p-value is
    ``(1 + #{perm >= observed}) / (B + 1)``. ``key`` names the random
    stream, so a battery of tests can run in any order.
    """
    x, y = _as_2d(x), _as_2d(y)
    n = x.shape[0]
    if y.shape[0] != n:
        raise ValueError(f"x has {n} rows, y has {y.shape[0]}")
    if n < 4:
        raise ValueError(f"HSIC needs at least 4 rows, got {n}")
    rows = subsample_rows(n, cfg, *key)
    return hsic_test_prepared(prepare_side(x, rows, cfg), prepare_side(y, rows, cfg), cfg, key)


def gamma_pvalue(a: _HsicSide, b: _HsicSide) -> tuple[float, float]:
    """Gamma approximation to the HSIC null distribution.

    Matches the first two moments of ``n * HSIC_b`` under independence
    (Gretton et al., 2008). ``A`` and ``B`` are centered kernel factors; the
    kernel diagonal is 1 for RBF kernels. Returns ``(statistic, p_value)``
    with the statistic normalized by ``(n - 1)**2``.
    """
    A, B = a.factor, b.factor
    n = A.shape[0]
    trace = float(np.sum((A.T @ B) ** 2))
    stat_m = trace / n  # n * tr(KHLH) / n**2
    prod = a.dense() * b.dense()
    diag = np.einsum("ij,ij->i", A, A) * np.einsum("ij,ij->i", B, B)
    var = (float(np.sum(prod.astype(np.float64) ** 2)) - float(np.sum(diag ** 2))) / 36.0 / n / (n - 1)
    var *= 72.0 * (n - 4) * (n - 5) / n / (n - 1) / (n - 2) / (n - 3)
    mu_x, mu_y = a.offdiag_mean, b.offdiag_mean
    mean = (1.0 + mu_x * mu_y - mu_x - mu_y) / n
    if var <= 0 or mean <= 0:
        return trace / (n - 1) ** 2, 1.0
    shape = mean * mean / var
    scale = var * n / mean
    p = float(stats.gamma.sf(stat_m, shape, scale=scale))
    return trace / (n - 1) ** 2, min(max(p, 0.0), 1.0)


def hsic_test_prepared(a: _HsicSide, b: _HsicSide, cfg: HsicConfig, key: Sequence = ()) -> TestResult:
    n = a.rows.size
    if a.factor is None or b.factor is None:
        return _degenerate(n, cfg.permutations)
    if cfg.null == "gamma":
        stat, p = gamma_pvalue(a, b)
        return TestResult(max(stat, 0.0), p, n, "hsic-gamma", 0)
    stat, p = permutation_pvalue(a.factor, b.factor, cfg.permutations, stream(cfg.seed, "perm", *key))
    return TestResult(max(stat, 0.0), p, n, "hsic-permutation", cfg.permutations)


def conditional_test(t, xi, Z=None, cfg: CondTestConfig = CondTestConfig(), key: Sequence = ()) -> TestResult:
    """Test whether ``t`` is independent of ``xi`` given ``Z``.

    With ``k``-fold cross-fitting, forests predict ``t`` from ``(Z, xi)`` and
    from ``(Z, shuffled xi)``; the per-sample held-out squared errors
    ``e_full`` and ``e_perm`` give a paired one-sided t statistic for
    ``mean(e_perm - e_full) > 0``. Statistics are averaged over
    ``cfg.repeats`` shuffles and referred to a t distribution with ``n - 1``
    degrees of freedom. A small p-value means ``xi`` carries information
    about ``t`` beyond ``Z``. An empty ``Z`` reduces to ``hsic_test``.
    """
    t = np.asarray(t, dtype=float).ravel()
    xi = _as_2d(xi)
    n = t.shape[0]
    Z = np.empty((n, 0)) if Z is None else _as_2d(Z)
    if xi.shape[0] != n or Z.shape[0] != n:
        raise ValueError("t, xi and Z must have the same number of rows")
    if Z.shape[1] == 0:
        return hsic_test(t, xi, replace(cfg.hsic, seed=cfg.seed), key)
    k = cfg.folds
    if n < 5 * k:
        raise ValueError(f"conditional test with {k} folds needs at least {5 * k} rows, got {n}")
    if _is_constant(t):
        return TestResult(0.0, 1.0, n, DEGENERATE_TARGET, k)
    if _is_constant(xi):
        return TestResult(0.0, 1.0, n, DEGENERATE, k)

    if n > cfg.subsample_cap:
        rows = np.sort(stream(cfg.seed, "cond-subsample", n, *key).choice(n, cfg.subsample_cap, replace=False))
        t, xi, Z = t[rows], xi[rows], Z[rows]
        n = rows.size
    rng = stream(cfg.seed, "cond", *key)
    folds = kfold_indices(n, k, int(rng.integers(0, 2**31 - 1)))
    XZ = np.hstack([Z, xi])
    j = XZ.shape[1] - xi.shape[1]
    e_full = np.empty(n)
    e_perm = np.empty((cfg.repeats, n))
    everything = np.arange(n)
    for f, test in enumerate(folds):
        train = np.setdiff1d(everything, test, assume_unique=True)
        fcfg = replace(cfg.forest, seed=int(rng.integers(0, 2**31 - 1)))
        model = fit(XZ[train], t[train], fcfg)
        e_full[test] = (model.predict(XZ[test]) - t[test]) ** 2
        for r in range(cfg.repeats):
            Xtr, Xte = XZ[train].copy(), XZ[test].copy()
            Xtr[:, j:] = Xtr[rng.permutation(train.size), j:]
            Xte[:, j:] = Xte[rng.permutation(test.size), j:]
            pmodel = fit(Xtr, t[train], fcfg)
            e_perm[r, test] = (pmodel.predict(Xte) - t[test]) ** 2
    tstats = [_paired_t(e_perm[r] - e_full) for r in range(cfg.repeats)]
    stat = float(np.mean(tstats))
    p = float(stats.t.sf(stat, df=n - 1))
    return TestResult(stat, min(max(p, 0.0), 1.0), n, "forest-permutation", k)


def _paired_t(diff: np.ndarray) -> float:
    sd = diff.std(ddof=1)
    mean = diff.mean()
    if sd == 0:
        return 0.0 if mean == 0 else float(np.sign(mean) * np.inf)
    return float(mean / (sd / np.sqrt(diff.size)))


def holm(p_values: Sequence[float]) -> np.ndarray:
    """Holm step-down adjusted p-values."""
    p = np.asarray(p_values, dtype=float)
    if p.size == 0:
        return p
    return multipletests(p, method="holm")[1]
