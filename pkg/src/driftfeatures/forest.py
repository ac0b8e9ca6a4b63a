"""
Random-forest regression engine.

Trees are CART regression trees grown on bootstrap resamples with the
variance-reduction criterion. Split candidates are taken from per-feature
quantile bins (at most ``max_bins`` per feature; with fewer distinct values
every midpoint is a candidate, which is exact CART). The tree builder and the
predictor are numba kernels; every tree draws its randomness from a stream
derived from ``(seed, tree index)`` so fitted forests do not depend on
``n_jobs``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numba
import numpy as np


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    min_leaf: int = 5
    max_features: int | None = None  # None -> ceil(d / 3)
    bootstrap: bool = True
    max_depth: int | None = None
    max_bins: int = 255
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        if self.max_features is not None and self.max_features < 1:
            raise ValueError("max_features must be >= 1")
        if not 2 <= self.max_bins <= 256:
            raise ValueError("max_bins must lie in [2, 256]")

    def features_per_split(self, d: int) -> int:
        if self.max_features is None:
            return max(1, math.ceil(d / 3))
        return min(self.max_features, d)


@dataclass(frozen=True)
class RiskEstimate:
    """Cross-validated mean squared error."""

    mean_risk: float
    fold_risks: tuple[float, ...]
    std: float

    @classmethod
    def from_folds(cls, fold_risks: Sequence[float]) -> "RiskEstimate":
        r = np.asarray(fold_risks, dtype=float)
        std = float(r.std(ddof=1)) if r.size > 1 else 0.0
        return cls(float(r.mean()), tuple(float(v) for v in r), std)


# ---------------------------------------------------------------------------
# binning


def _cut_points(col: np.ndarray, max_bins: int) -> np.ndarray:
    u = np.unique(col)
    if u.size <= max_bins:
        return (u[:-1] + u[1:]) / 2.0
    q = np.quantile(col, np.linspace(0.0, 1.0, max_bins + 1)[1:-1])
    return np.unique(q)


def _apply_bins(X: np.ndarray, cuts: list[np.ndarray]) -> np.ndarray:
    Xb = np.empty(X.shape, dtype=np.uint8)
    for j, c in enumerate(cuts):
        Xb[:, j] = np.searchsorted(c, X[:, j], side="left")
    return Xb


# ---------------------------------------------------------------------------
# numba kernels


@numba.njit(cache=True, nogil=True)
def _build_tree(Xb, y, idx, n_bins, mtry, min_leaf, max_depth, seed):
    np.random.seed(seed)
    n = idx.shape[0]
    d = Xb.shape[1]
    max_nodes = 2 * n + 1
    feat = np.full(max_nodes, -1, np.int32)
    thr = np.zeros(max_nodes, np.int32)
    left = np.full(max_nodes, -1, np.int32)
    right = np.full(max_nodes, -1, np.int32)
    value = np.zeros(max_nodes, np.float64)

    st_node = np.empty(max_nodes, np.int64)
    st_start = np.empty(max_nodes, np.int64)
    st_end = np.empty(max_nodes, np.int64)
    st_depth = np.empty(max_nodes, np.int64)
    features = np.arange(d)
    cnt = np.zeros(256, np.int64)
    sm = np.zeros(256, np.float64)

    sp = 0
    st_node[0] = 0
    st_start[0] = 0
    st_end[0] = n
    st_depth[0] = 0
    sp = 1
    n_nodes = 1
    while sp > 0:
        sp -= 1
        node = st_node[sp]
        start = st_start[sp]
        end = st_end[sp]
        depth = st_depth[sp]
        m = end - start
        s = 0.0
        ymin = np.inf
        ymax = -np.inf
        for i in range(start, end):
            v = y[idx[i]]
            s += v
            if v < ymin:
                ymin = v
            if v > ymax:
                ymax = v
        if ymin == ymax:
            value[node] = ymin
            continue
        mean = s / m
        if mean < ymin:
            mean = ymin
        elif mean > ymax:
            mean = ymax
        value[node] = mean
        if m < 2 * min_leaf or (max_depth >= 0 and depth >= max_depth):
            continue

        parent = s * s / m
        best = parent + 1e-12 * (abs(parent) + 1.0)
        best_f = -1
        best_b = -1
        visited = 0
        k = 0
        while k < d:
            j = k + np.random.randint(d - k)
            tmp = features[k]
            features[k] = features[j]
            features[j] = tmp
            f = features[k]
            k += 1
            nb = n_bins[f]
            if nb > 1:
                for b in range(nb):
                    cnt[b] = 0
                    sm[b] = 0.0
                for i in range(start, end):
                    r = idx[i]
                    b = Xb[r, f]
                    cnt[b] += 1
                    sm[b] += y[r]
                ln = 0
                ls = 0.0
                for b in range(nb - 1):
                    ln += cnt[b]
                    ls += sm[b]
                    if ln < min_leaf or cnt[b] == 0:
                        continue
                    rn = m - ln
                    if rn < min_leaf:
                        break
                    rs = s - ls
                    score = ls * ls / ln + rs * rs / rn
                    if score > best:
                        best = score
                        best_f = f
                        best_b = b
            visited += 1
            if visited >= mtry and best_f >= 0:
                break
        if best_f < 0:
            continue

        # partition idx[start:end] so that codes <= best_b come first
        lo = start
        hi = end - 1
        while lo <= hi:
            if Xb[idx[lo], best_f] <= best_b:
                lo += 1
            else:
                tmp = idx[lo]
                idx[lo] = idx[hi]
                idx[hi] = tmp
                hi -= 1
        feat[node] = best_f
        thr[node] = best_b
        lnode = n_nodes
        rnode = n_nodes + 1
        n_nodes += 2
        left[node] = lnode
        right[node] = rnode
        st_node[sp] = rnode
        st_start[sp] = lo
        st_end[sp] = end
        st_depth[sp] = depth + 1
        sp += 1
        st_node[sp] = lnode
        st_start[sp] = start
        st_end[sp] = lo
        st_depth[sp] = depth + 1
        sp += 1

    return (
        feat[:n_nodes].copy(),
        thr[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
    )


@numba.njit(cache=True, nogil=True)
def _predict(Xb, offsets, feat, thr, left, right, value):
    n = Xb.shape[0]
    n_trees = offsets.shape[0] - 1
    out = np.zeros(n, np.float64)
    for i in range(n):
        acc = 0.0
        for t in range(n_trees):
            base = offsets[t]
            node = 0
            while feat[base + node] >= 0:
                if Xb[i, feat[base + node]] <= thr[base + node]:
                    node = left[base + node]
                else:
                    node = right[base + node]
            acc += value[base + node]
        out[i] = acc / n_trees
    return out


# ---------------------------------------------------------------------------


def _tree_seed(seed: int, t: int) -> tuple[np.random.Generator, int]:
    rng = np.random.default_rng([int(seed), int(t)])
    return rng, int(rng.integers(0, 2**31 - 1))


@dataclass
class Forest:
    """A fitted forest. Immutable after :func:`fit` returns."""

    config: ForestConfig
    cuts: list[np.ndarray]
    offsets: np.ndarray
    feat: np.ndarray
    thr: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    y_min: float
    y_max: float
    n_features: int = field(default=0)

    def bin(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.shape[1] != self.n_features:
            raise ValueError(f"forest was fit on {self.n_features} features, got {X.shape[1]}")
        return _apply_bins(X, self.cuts)

    def predict_binned(self, Xb: np.ndarray) -> np.ndarray:
        if self.y_min == self.y_max:
            return np.full(Xb.shape[0], self.y_min)
        p = _predict(np.ascontiguousarray(Xb), self.offsets, self.feat, self.thr, self.left, self.right, self.value)
        return np.clip(p, self.y_min, self.y_max)

    def predict(self, X) -> np.ndarray:
        return self.predict_binned(self.bin(X))


def fit(X, y, cfg: ForestConfig = ForestConfig()) -> Forest:
    """Grow a regression forest for ``y`` from the columns of ``X``."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.ascontiguousarray(y, dtype=float)
    n, d = X.shape
    if y.shape != (n,):
        raise ValueError(f"y has shape {y.shape}, expected ({n},)")
    if d < 1:
        raise ValueError("X needs at least one column")
    if n < 2 * cfg.min_leaf:
        raise ValueError(f"need at least 2*min_leaf = {2 * cfg.min_leaf} rows, got {n}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("X and y must be finite")

    cuts = [_cut_points(X[:, j], cfg.max_bins) for j in range(d)]
    Xb = _apply_bins(X, cuts)
    n_bins = np.array([c.size + 1 for c in cuts], dtype=np.int64)
    mtry = cfg.features_per_split(d)
    max_depth = -1 if cfg.max_depth is None else int(cfg.max_depth)

    def grow(t):
        rng, nseed = _tree_seed(cfg.seed, t)
        if cfg.bootstrap:
            idx = rng.integers(0, n, n)
        else:
            idx = np.arange(n)
        return _build_tree(Xb, y, idx.astype(np.int64), n_bins, mtry, cfg.min_leaf, max_depth, nseed)

    if cfg.n_jobs > 1 and cfg.n_trees > 1:
        with ThreadPoolExecutor(cfg.n_jobs) as ex:
            trees = list(ex.map(grow, range(cfg.n_trees)))
    else:
        trees = [grow(t) for t in range(cfg.n_trees)]

    sizes = np.array([t[0].size for t in trees])
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    cat = [np.concatenate([t[i] for t in trees]) for i in range(5)]
    return Forest(cfg, cuts, offsets, *cat, float(y.min()), float(y.max()), d)


def permutation_importance(model: Forest, X, y, rng: np.random.Generator, columns: Iterable[int] | None = None) -> np.ndarray:
    """Increase in mean squared error on ``(X, y)`` after shuffling each column."""
    Xb = model.bin(X)
    y = np.asarray(y, dtype=float)
    base = np.mean((model.predict_binned(Xb) - y) ** 2)
    cols = range(Xb.shape[1]) if columns is None else list(columns)
    imp = np.zeros(Xb.shape[1])
    for j in cols:
        saved = Xb[:, j].copy()
        Xb[:, j] = saved[rng.permutation(saved.size)]
        imp[j] = np.mean((model.predict_binned(Xb) - y) ** 2) - base
        Xb[:, j] = saved
    return imp


def kfold_indices(n: int, k: int, seed: int) -> list[np.ndarray]:
    """Deterministic shuffled k-fold split of ``range(n)``; returns test folds."""
    if k < 2:
        raise ValueError("need at least 2 folds")
    if k > n:
        raise ValueError(f"{k} folds for {n} rows")
    perm = np.random.default_rng([int(seed), 0x5EED]).permutation(n)
    return [np.sort(f) for f in np.array_split(perm, k)]


def cv_risk(X, y, subset: Iterable[int], cfg: ForestConfig = ForestConfig(), k: int = 5) -> RiskEstimate:
    """k-fold cross-validated MSE of forests trained on the columns in ``subset``.

    An empty subset uses the training-fold mean of ``y`` as predictor.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float)
    cols = sorted({int(j) for j in subset})
    n = y.shape[0]
    folds = kfold_indices(n, k, cfg.seed)
    risks = []
    for f, test in enumerate(folds):
        train = np.setdiff1d(np.arange(n), test, assume_unique=True)
        if not cols:
            pred = np.full(test.size, y[train].mean())
        else:
            model = fit(X[np.ix_(train, cols)], y[train], replace(cfg, seed=_fold_seed(cfg.seed, f)))
            pred = model.predict(X[np.ix_(test, cols)])
        risks.append(float(np.mean((pred - y[test]) ** 2)))
    return RiskEstimate.from_folds(risks)


def _fold_seed(seed: int, fold: int) -> int:
    return int(np.random.default_rng([int(seed), 0xF01D, int(fold)]).integers(0, 2**31 - 1))


@dataclass(frozen=True)
class ShadowScreen:
    relevant: frozenset[int]
    hits: np.ndarray
    importance: np.ndarray
    shadow_max: np.ndarray


def shadow_screen(X, y, cfg: ForestConfig = ForestConfig(), repeats: int = 11, holdout: float = 0.3) -> ShadowScreen:
    """Shadow-feature screening with full diagnostics.

    Every run appends an independently shuffled copy of each column, fits a
    forest on a training split and measures permutation importance on the
    held-out rows. A column scores a hit when its importance is positive and
    beats every shadow. Columns with hits in a strict majority of runs are
    relevant.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    if n < 20:
        raise ValueError(f"shadow screening needs at least 20 rows, got {n}")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    hits = np.zeros(d, dtype=int)
    imp_sum = np.zeros(d)
    shadow_max = np.zeros(repeats)
    n_hold = max(1, int(round(holdout * n)))
    for r in range(repeats):
        rng = np.random.default_rng([int(cfg.seed), 0x5AD0, r])
        shadows = np.column_stack([X[rng.permutation(n), j] for j in range(d)])
        Xa = np.hstack([X, shadows])
        perm = rng.permutation(n)
        test, train = perm[:n_hold], perm[n_hold:]
        model = fit(Xa[train], y[train], replace(cfg, seed=_fold_seed(cfg.seed, 1000 + r)))
        imp = permutation_importance(model, Xa[test], y[test], rng)
        smax = imp[d:].max()
        shadow_max[r] = smax
        hits += (imp[:d] > smax) & (imp[:d] > 0)
        imp_sum += imp[:d]
    relevant = frozenset(int(j) for j in np.flatnonzero(hits * 2 > repeats))
    return ShadowScreen(relevant, hits, imp_sum / repeats, shadow_max)


def shadow_relevance(X, y, cfg: ForestConfig = ForestConfig(), repeats: int = 11) -> set[int]:
    """Indices of columns that beat their shadows in a majority of runs."""
    return set(shadow_screen(X, y, cfg, repeats).relevant)
