"""
Ground-truth benchmark generator.

Random Bayesian networks over ``T, X_1..X_d`` where ``T`` has no parents.
Each feature is Gaussian given its parents; mean and log-scale come from
small tanh networks with standard-normal weights; parent inputs are
standardized on a pilot sample so the first layer does not saturate. Labels follow the network
structure: children of ``T`` and their other parents are drift inducing,
the remaining features connected to ``T`` are faithfully drifting, and
everything else is non-drifting.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from scipy.sparse.csgraph import connected_components

from .core import Dataset, FeatureCategory, equidistant_time, save_csv, save_labels

CLIP = 1e6
SIGMA_FLOOR = 0.05
PILOT_ROWS = 2000


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class NetworkSpec:
    d: int
    edge_prob: float = 0.15
    hidden_width: int = 8
    n_samples: int = 10_000
    seed: int = 0
    target_counts: tuple[int, int, int] | None = None  # (I, F, N)
    max_attempts: int = 1000
    standardize_inputs: bool = True

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if not 0 <= self.edge_prob <= 1:
            raise ValueError("edge_prob must lie in [0, 1]")
        if self.hidden_width < 1:
            raise ValueError("hidden_width must be >= 1")
        if self.n_samples < 2:
            raise ValueError("n_samples must be >= 2")
        if self.target_counts is not None:
            counts = tuple(int(c) for c in self.target_counts)
            if len(counts) != 3 or min(counts) < 0:
                raise ValueError("target_counts must be three non-negative integers (I, F, N)")
            if sum(counts) != self.d:
                raise ValueError(f"target_counts {counts} sum to {sum(counts)}, not d = {self.d}")
            object.__setattr__(self, "target_counts", counts)
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")

    def to_dict(self) -> dict[str, Any]:
        out = {
            "d": self.d, "edge_prob": self.edge_prob, "hidden_width": self.hidden_width,
            "n_samples": self.n_samples, "seed": self.seed, "max_attempts": self.max_attempts,
            "standardize_inputs": self.standardize_inputs,
        }
        if self.target_counts is not None:
            out["counts"] = dict(zip("IFN", self.target_counts))
        return out

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "NetworkSpec":
        raw = dict(raw)
        counts = raw.pop("counts", None) or raw.pop("target_counts", None)
        if isinstance(counts, dict):
            counts = (counts["I"], counts["F"], counts["N"])
        for k in ("I", "F", "N"):
            raw.pop(k, None)
        return cls(target_counts=tuple(counts) if counts is not None else None, **raw)


@dataclass
class MLP:
    """``w2 . tanh(W1 x + b1) + b2``; with no inputs the output is ``b2``."""

    W1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float

    def __call__(self, P: np.ndarray) -> np.ndarray:
        if P.shape[1] == 0:
            return np.full(P.shape[0], self.b2)
        return np.tanh(P @ self.W1.T + self.b1) @ self.w2 + self.b2

    @classmethod
    def random(cls, n_in: int, width: int, rng: np.random.Generator) -> "MLP":
        if n_in == 0:
            return cls(np.zeros((0, 0)), np.zeros(0), np.zeros(0), float(rng.standard_normal()))
        return cls(rng.standard_normal((width, n_in)), rng.standard_normal(width),
                   rng.standard_normal(width), float(rng.standard_normal()))

    def to_dict(self):
        return {"W1": self.W1.tolist(), "b1": self.b1.tolist(), "w2": self.w2.tolist(), "b2": self.b2}

    @classmethod
    def from_dict(cls, raw):
        W1 = np.asarray(raw["W1"], dtype=float)
        if W1.size == 0:
            W1 = np.zeros((0, 0))
        return cls(W1, np.asarray(raw["b1"], dtype=float), np.asarray(raw["w2"], dtype=float), float(raw["b2"]))


def _softplus(z: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, z)


@dataclass
class GroundTruthNetwork:
    """DAG over node 0 = ``T`` and nodes ``1..d`` = features.

    ``adj[a, b]`` is true for an edge ``a -> b``. ``order`` is a topological
    order starting with ``T``.
    """

    adj: np.ndarray
    order: list[int]
    mean_nets: dict[int, MLP]
    scale_nets: dict[int, MLP]
    labels: dict[str, FeatureCategory]
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def d(self) -> int:
        return self.adj.shape[0] - 1

    @property
    def names(self) -> tuple[str, ...]:
        return feature_names(self.d)

    def parents(self, node: int) -> list[int]:
        return [int(p) for p in np.flatnonzero(self.adj[:, node])]

    def children(self, node: int) -> list[int]:
        return [int(c) for c in np.flatnonzero(self.adj[node])]

    def counts(self) -> tuple[int, int, int]:
        return label_counts(self.labels)

    def to_dict(self) -> dict[str, Any]:
        return {
            "nodes": ["T", *self.names],
            "edges": [[int(a), int(b)] for a, b in zip(*np.nonzero(self.adj))],
            "order": self.order,
            "mean_nets": {str(k): v.to_dict() for k, v in self.mean_nets.items()},
            "scale_nets": {str(k): v.to_dict() for k, v in self.scale_nets.items()},
            "labels": {k: v.value for k, v in self.labels.items()},
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "GroundTruthNetwork":
        k = len(raw["nodes"])
        adj = np.zeros((k, k), dtype=bool)
        for a, b in raw["edges"]:
            adj[a, b] = True
        return cls(
            adj,
            [int(v) for v in raw["order"]],
            {int(i): MLP.from_dict(v) for i, v in raw["mean_nets"].items()},
            {int(i): MLP.from_dict(v) for i, v in raw["scale_nets"].items()},
            {n: FeatureCategory.parse(v) for n, v in raw["labels"].items()},
            dict(raw.get("metadata", {})),
        )


def feature_names(d: int) -> tuple[str, ...]:
    return tuple(f"X{i}" for i in range(1, d + 1))


def label_counts(labels) -> tuple[int, int, int]:
    vals = [FeatureCategory.parse(v).value for v in labels.values()]
    return vals.count("I"), vals.count("F"), vals.count("N")


def structural_labels(adj: np.ndarray) -> list[FeatureCategory]:
    """Categories of nodes ``1..d`` implied by the DAG ``adj`` (node 0 is T)."""
    adj = np.asarray(adj, dtype=bool)
    k = adj.shape[0]
    children = np.flatnonzero(adj[0])
    inducing = set(int(c) for c in children)
    for c in children:
        inducing.update(int(p) for p in np.flatnonzero(adj[:, c]))
    inducing.discard(0)
    _, comp = connected_components(adj | adj.T, directed=False)
    out = []
    for v in range(1, k):
        if v in inducing:
            out.append(FeatureCategory.DRIFT_INDUCING)
        elif comp[v] == comp[0]:
            out.append(FeatureCategory.FAITHFULLY_DRIFTING)
        else:
            out.append(FeatureCategory.NON_DRIFTING)
    return out


def random_dag(d: int, edge_prob: float, rng: np.random.Generator) -> tuple[np.ndarray, list[int]]:
    """Random DAG with T first in a random topological order."""
    order = [0] + [int(v) + 1 for v in rng.permutation(d)]
    k = d + 1
    upper = np.triu(rng.random((k, k)) < edge_prob, k=1)
    adj = np.zeros((k, k), dtype=bool)
    pos = np.array(order)
    adj[np.ix_(pos, pos)] = upper
    return adj, order


def generate_network(spec: NetworkSpec) -> GroundTruthNetwork:
    """Draw a network; with ``target_counts`` resample until the labels match."""
    names = feature_names(spec.d)
    for attempt in range(spec.max_attempts):
        rng = np.random.default_rng([int(spec.seed), 0xDA6, attempt])
        adj, order = random_dag(spec.d, spec.edge_prob, rng)
        cats = structural_labels(adj)
        labels = dict(zip(names, cats))
        if spec.target_counts is None or label_counts(labels) == spec.target_counts:
            break
    else:
        raise GenerationError(
            f"no network with counts (I, F, N) = {spec.target_counts} in {spec.max_attempts} attempts "
            f"at edge_prob = {spec.edge_prob}"
        )
    wrng = np.random.default_rng([int(spec.seed), 0x3E7])
    mean_nets, scale_nets = {}, {}
    for v in order[1:]:
        n_par = int(adj[:, v].sum())
        mean_nets[v] = MLP.random(n_par, spec.hidden_width, wrng)
        scale_nets[v] = MLP.random(n_par, spec.hidden_width, wrng)
    meta = {"spec": spec.to_dict(), "attempts": attempt + 1}
    net = GroundTruthNetwork(adj, order, mean_nets, scale_nets, labels, meta)
    if spec.standardize_inputs:
        _standardize_inputs(net, np.random.default_rng([int(spec.seed), 0x9170]))
    return net


def _standardize_inputs(net: GroundTruthNetwork, rng: np.random.Generator, n: int = PILOT_ROWS) -> None:
    """Rescale first-layer weights so every network sees standardized parents.

    A pilot sample is drawn in topological order; each node's parent means and
    standard deviations are folded into ``W1`` and ``b1`` of both of its
    networks before the node itself is sampled. The stored weights are thus
    N(0, 1) in standardized units and the network stays self-contained.
    """
    cols = np.zeros((n, net.adj.shape[0]))
    cols[:, 0] = equidistant_time(n)
    for v in net.order[1:]:
        ps = net.parents(v)
        P = cols[:, ps]
        if ps:
            m = P.mean(axis=0)
            s = P.std(axis=0)
            s[s <= 0] = 1.0
            for nn in (net.mean_nets[v], net.scale_nets[v]):
                nn.b1 = nn.b1 - nn.W1 @ (m / s)
                nn.W1 = nn.W1 / s
        mu = net.mean_nets[v](P)
        sigma = _softplus(net.scale_nets[v](P)) + SIGMA_FLOOR
        cols[:, v] = np.clip(mu + sigma * rng.standard_normal(n), -CLIP, CLIP)


@dataclass
class Sample:
    dataset: Dataset
    labels: dict[str, FeatureCategory]
    clipped: int


def sample(net: GroundTruthNetwork, n: int, seed: int = 0) -> Sample:
    """Draw ``n`` rows; ``T`` is the equidistant grid ``i / (n - 1)``."""
    if n < 2:
        raise ValueError("n must be >= 2")
    rng = np.random.default_rng([int(seed), 0x5A3])
    k = net.adj.shape[0]
    cols = np.zeros((n, k))
    cols[:, 0] = equidistant_time(n)
    clipped = 0
    for v in net.order[1:]:
        P = cols[:, net.parents(v)]
        mu = net.mean_nets[v](P)
        sigma = _softplus(net.scale_nets[v](P)) + SIGMA_FLOOR
        x = mu + sigma * rng.standard_normal(n)
        bad = ~np.isfinite(x) | (np.abs(x) > CLIP)
        if bad.any():
            clipped += int(bad.sum())
            x = np.clip(np.nan_to_num(x, nan=0.0, posinf=CLIP, neginf=-CLIP), -CLIP, CLIP)
        cols[:, v] = x
    ds = Dataset(net.names, cols[:, 1:], cols[:, 0])
    return Sample(ds, dict(net.labels), clipped)


def faithfulness_audit(net: GroundTruthNetwork, ds: Dataset, alpha: float = 0.01, cfg=None) -> list[str]:
    """Children of ``T`` whose marginal dependence on time is not detected.

    The result is also stored under ``metadata["audit_failures"]``.
    """
    from .independence import HsicConfig, hsic_test

    cfg = cfg or HsicConfig()
    failed = []
    for c in net.children(0):
        r = hsic_test(ds.time, ds.values[:, c - 1], cfg, key=("audit", c))
        if r.p_value > alpha:
            failed.append(net.names[c - 1])
    net.metadata["audit_failures"] = failed
    return failed


def write_benchmark(net: GroundTruthNetwork, smp: Sample, prefix) -> dict[str, Path]:
    """Write ``<prefix>.csv``, ``<prefix>_labels.json`` and ``<prefix>_network.json``."""
    prefix = Path(prefix)
    paths = {
        "data": prefix.with_name(prefix.name + ".csv"),
        "labels": prefix.with_name(prefix.name + "_labels.json"),
        "network": prefix.with_name(prefix.name + "_network.json"),
    }
    save_csv(smp.dataset, paths["data"])
    save_labels(smp.labels, paths["labels"])
    meta = dict(net.to_dict())
    meta["metadata"] = {**net.metadata, "clipped": smp.clipped}
    with paths["network"].open("w", encoding="utf-8") as fh:
        json.dump(meta, fh)
    return paths


def load_network(path) -> GroundTruthNetwork:
    with Path(path).open(encoding="utf-8") as fh:
        return GroundTruthNetwork.from_dict(json.load(fh))
