"""
Exact drift semantics on small discrete Bayesian networks.

The joint distribution of a binary time node and a handful of binary
features is enumerated in full. Conditional drift is then checked literally
(compare ``p_t(Y | x)`` across time values on every ``x`` of positive
probability), which yields brute-force drift-inducing sets and feature
categories. ``exact_statistical_dfa`` runs the statistical analyzer's graph
and classification logic with exact independence queries in place of tests.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .core import FeatureCategory
from .statistical import classify_from_pvalues, drifting_set, graph_from_pvalues

TOL = 1e-12


@dataclass
class DiscreteNetwork:
    """Binary DAG over node 0 (time) and nodes ``1..d``.

    ``cpt[v]`` has one entry per configuration of ``parents[v]`` (first
    parent is the most significant bit) holding ``P(v = 1 | parents)``.
    """

    parents: dict[int, list[int]]
    cpt: dict[int, np.ndarray]
    order: list[int]

    @property
    def d(self) -> int:
        return len(self.order) - 1

    def adjacency(self) -> np.ndarray:
        k = self.d + 1
        adj = np.zeros((k, k), dtype=bool)
        for v, ps in self.parents.items():
            for p in ps:
                adj[p, v] = True
        return adj

    def joint(self) -> np.ndarray:
        """Full joint table with axis ``v`` for node ``v``."""
        k = self.d + 1
        P = np.ones((2,) * k)
        for states in itertools.product((0, 1), repeat=k):
            prob = 1.0
            for v in range(k):
                ps = self.parents[v]
                idx = 0
                for p in ps:
                    idx = 2 * idx + states[p]
                p1 = self.cpt[v][idx]
                prob *= p1 if states[v] == 1 else 1.0 - p1
            P[states] = prob
        return P


def random_discrete_network(d: int, edge_prob: float, rng: np.random.Generator, positive: bool = True,
                            lo: float = 0.05, hi: float = 0.95) -> DiscreteNetwork:
    """Random binary network with time as a parentless node.

    ``positive=False`` makes some conditional probabilities 0 or 1, which
    breaks strict positivity of the joint.
    """
    order = [0] + [int(v) + 1 for v in rng.permutation(d)]
    parents: dict[int, list[int]] = {0: []}
    for pos, v in enumerate(order[1:], start=1):
        parents[v] = [u for u in order[:pos] if rng.random() < edge_prob]
    cpt = {}
    for v in order:
        m = 2 ** len(parents[v])
        p = rng.uniform(lo, hi, size=m)
        if not positive:
            mask = rng.random(m) < 0.3
            p[mask] = rng.integers(0, 2, size=int(mask.sum()))
        cpt[v] = p
    return DiscreteNetwork(parents, cpt, order)


# ---------------------------------------------------------------------------
# exact queries on a joint table


def marginal(P: np.ndarray, keep: Iterable[int]) -> np.ndarray:
    """Marginal over the axes in ``keep`` (result axes in the given order)."""
    keep = list(keep)
    drop = tuple(a for a in range(P.ndim) if a not in keep)
    M = P.sum(axis=drop)
    kept_sorted = sorted(keep)
    return np.transpose(M, [kept_sorted.index(a) for a in keep]) if keep else M


def independent(P: np.ndarray, A: Iterable[int], B: Iterable[int], C: Iterable[int] = (), tol: float = TOL) -> bool:
    """Exact check of ``A ⊥ B | C``: ``P(a,b,c) P(c) = P(a,c) P(b,c)`` everywhere."""
    A, B, C = list(A), list(B), list(C)
    if not A or not B:
        return True
    Q = marginal(P, A + B + C)
    na, nb = len(A), len(B)
    Qab = Q
    Qc = Q.sum(axis=tuple(range(na + nb)))
    Qac = Q.sum(axis=tuple(range(na, na + nb)))
    Qbc = Q.sum(axis=tuple(range(na)))
    lhs = Qab * Qc[(None,) * (na + nb)]
    rhs = Qac[(slice(None),) * na + (None,) * nb] * Qbc[(None,) * na]
    return bool(np.all(np.abs(lhs - rhs) <= tol))


def has_conditional_drift(P: np.ndarray, Y: Iterable[int], X: Iterable[int] = (), time_axis: int = 0,
                          tol: float = TOL) -> bool:
    """Literal drift check: does ``p_t(Y | x)`` vary with ``t`` on some ``x``?

    For every ``x`` with positive probability, the conditional distributions
    of ``Y`` given ``(x, t)`` are compared across all pairs of time values
    that both have positive probability given ``x``. With ``X`` empty this is
    plain drift of ``Y``.
    """
    Y, X = list(Y), list(X)
    if not Y:
        return False
    Q = marginal(P, [time_axis] + X + Y)  # axes: t, x..., y...
    nx = len(X)
    for xs in itertools.product(*(range(s) for s in Q.shape[1:1 + nx])):
        block = Q[(slice(None),) + xs]  # t, y...
        p_tx = block.reshape(block.shape[0], -1).sum(axis=1)
        if p_tx.sum() <= tol:
            continue
        conds = [block[t].ravel() / p_tx[t] for t in range(block.shape[0]) if p_tx[t] > tol]
        for a, b in itertools.combinations(conds, 2):
            if np.any(np.abs(a - b) > 1e-9):
                return True
    return False


def _subsets(items: list[int]):
    for r in range(len(items) + 1):
        for c in itertools.combinations(items, r):
            yield frozenset(c)


@dataclass
class BruteForceAnalysis:
    """Everything the drift definitions say about one joint distribution."""

    d: int
    inducing_sets: list[frozenset[int]]
    minimal_inducing_sets: list[frozenset[int]]
    drifting: set[int]
    strongly_drifting: set[int]
    inducing_features: set[int]
    strongly_inducing: set[int]
    labels: list[FeatureCategory] = field(default_factory=list)

    @property
    def faithfully_drifting(self) -> set[int]:
        return self.drifting - self.inducing_features

    @property
    def weakly_drifting(self) -> set[int]:
        return self.drifting - self.strongly_drifting


def brute_force(P: np.ndarray) -> BruteForceAnalysis:
    """Enumerate drift-inducing sets and derive feature categories.

    Feature ``i`` of the result is axis ``i + 1`` of ``P``.
    """
    d = P.ndim - 1
    feats = list(range(1, d + 1))
    inducing = [S for S in _subsets(feats) if not has_conditional_drift(P, [f for f in feats if f not in S], sorted(S))]
    minimal = [S for S in inducing if not any(T < S for T in inducing)]
    union = set().union(*minimal) if minimal else set()
    strongly = set(feats)
    for S in inducing:
        strongly &= S
    drifting, strong_drift = set(), set()
    for i in feats:
        rest = [f for f in feats if f != i]
        if any(has_conditional_drift(P, [i], sorted(R)) for R in _subsets(rest)):
            drifting.add(i)
        if has_conditional_drift(P, [i], rest):
            strong_drift.add(i)
    labels = []
    for i in feats:
        if i in union:
            labels.append(FeatureCategory.DRIFT_INDUCING)
        elif i in drifting:
            labels.append(FeatureCategory.FAITHFULLY_DRIFTING)
        else:
            labels.append(FeatureCategory.NON_DRIFTING)

    def shift(s):
        return {v - 1 for v in s}

    return BruteForceAnalysis(
        d,
        [frozenset(shift(S)) for S in inducing],
        [frozenset(shift(S)) for S in minimal],
        shift(drifting),
        shift(strong_drift),
        shift(union),
        shift(strongly & union),
        labels,
    )


def exact_statistical_dfa(P: np.ndarray, alpha: float = 0.01) -> list[FeatureCategory]:
    """Statistical analyzer with exact independence queries (p = 0 or 1)."""
    d = P.ndim - 1
    pv = {(a, b): (1.0 if independent(P, [a], [b]) else 0.0) for a in range(d + 1) for b in range(a + 1, d + 1)}
    g = graph_from_pvalues(["time"] + [f"X{i}" for i in range(1, d + 1)], pv, alpha)
    drifting = drifting_set(g)

    def cond_p(i, rest):
        return 1.0 if independent(P, [0], [i + 1], [r + 1 for r in rest]) else 0.0

    result = classify_from_pvalues(d, drifting, cond_p, alpha)
    return [result[i][0] for i in range(d)]
