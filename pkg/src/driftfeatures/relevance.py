"""
Relevance Bounds analysis: forest regression of time on the features.

Features that beat their shadows when predicting time are drifting. A
drifting feature is drift inducing when leaving it out raises the
cross-validated risk by more than a noise threshold, and faithfully drifting
otherwise.
"""

from __future__ import annotations

import math
import time as _time
from dataclasses import asdict

import numpy as np

from .core import AnalysisReport, DataError, Dataset, FeatureCategory, FeatureRecord, standardize
from .forest import ForestConfig, cv_risk, shadow_screen


def categorize_gaps(gaps: dict[int, float], epsilon: dict[int, float] | float) -> dict[int, FeatureCategory]:
    """``I`` where the LOCO gap exceeds its threshold, ``F`` otherwise."""
    out = {}
    for i, gap in gaps.items():
        eps = epsilon[i] if isinstance(epsilon, dict) else epsilon
        out[i] = FeatureCategory.DRIFT_INDUCING if gap > eps else FeatureCategory.FAITHFULLY_DRIFTING
    return out


def analyze_relevance_bounds(ds: Dataset, cfg: ForestConfig = ForestConfig(), k: int = 5, epsilon_mult: float = 2.0,
                             epsilon: float | None = None, repeats: int = 11, scale: bool = True) -> AnalysisReport:
    """Relevance Bounds analysis of one dataset.

    Parameters
    ----------
    ds : Dataset
    cfg : ForestConfig
        Forest used for screening and for every risk estimate.
    k : int
        Cross-validation folds.
    epsilon_mult : float
        Threshold multiplier on the pooled fold-risk standard deviation.
    epsilon : float, optional
        Fixed absolute threshold; overrides ``epsilon_mult``.
    repeats : int
        Shadow-screening runs.
    scale : bool
        Standardize the features first.
    """
    started = _time.perf_counter()
    if ds.n < 20:
        raise DataError(f"Relevance Bounds needs at least 20 rows, got {ds.n}")
    ds.require_time_varies()
    work = standardize(ds) if scale else ds
    X = work.values
    t = (ds.time - ds.time.min()) / np.ptp(ds.time)

    screen = shadow_screen(X, t, cfg, repeats)
    relevant = sorted(screen.relevant)
    null_risk = cv_risk(X, t, [], cfg, k)
    gaps: dict[int, float] = {}
    eps: dict[int, float] = {}
    accuracy = 0.0
    if relevant:
        base = cv_risk(X, t, relevant, cfg, k)
        for i in relevant:
            red = cv_risk(X, t, [j for j in relevant if j != i], cfg, k)
            gaps[i] = red.mean_risk - base.mean_risk
            if epsilon is not None:
                eps[i] = float(epsilon)
            else:
                eps[i] = epsilon_mult * math.sqrt((base.std ** 2 + red.std ** 2) / 2.0)
        if null_risk.mean_risk > 0:
            accuracy = 1.0 - base.mean_risk / null_risk.mean_risk
        baseline = base.mean_risk
    else:
        baseline = null_risk.mean_risk
    cats = categorize_gaps(gaps, eps)

    records = []
    for i, name in enumerate(ds.names):
        records.append(FeatureRecord(name, cats.get(i, FeatureCategory.NON_DRIFTING), {
            "importance": float(screen.importance[i]),
            "loco_gap": gaps.get(i),
            "epsilon": eps.get(i),
        }))
    config = {"forest": asdict(cfg), "folds": k, "epsilon_mult": epsilon_mult, "epsilon": epsilon,
              "repeats": repeats, "standardize": scale}
    summary = {
        "relevant": relevant,
        "accuracy_cv_r2": float(accuracy),
        "baseline_risk": float(baseline),
        "null_risk": float(null_risk.mean_risk),
        "n_rows": ds.n,
    }
    return AnalysisReport("relevance-bounds", records, _time.perf_counter() - started, config, summary)
