"""
Find and categorize drifting features in tabular data.

Features are non-drifting, faithfully drifting (their drift is explained by
other features) or drift inducing. Two analyzers are provided: a statistical
one built on kernel and forest-based independence tests, and a model-based
one built on forest relevance bounds.
"""

from .core import (
    AnalysisReport,
    DataError,
    Dataset,
    FeatureCategory,
    FeatureRecord,
    equidistant_time,
    from_array,
    load_csv,
    load_labels,
    load_report,
    save_csv,
    save_labels,
    standardize,
    window,
)
from .evalbench import BenchmarkRow, benchmark, score, table1_specs
from .forest import ForestConfig, cv_risk, fit, permutation_importance, shadow_relevance
from .independence import CondTestConfig, HsicConfig, TestResult, conditional_test, holm, hsic_statistic, hsic_test
from .relevance import analyze_relevance_bounds
from .statistical import analyze_statistical, build_graph, classify, drifting_set
from .synth import GroundTruthNetwork, NetworkSpec, generate_network, sample

__version__ = "0.1.0"

__all__ = [
    "AnalysisReport", "BenchmarkRow", "CondTestConfig", "DataError", "Dataset", "FeatureCategory",
    "FeatureRecord", "ForestConfig", "GroundTruthNetwork", "HsicConfig", "NetworkSpec", "TestResult",
    "analyze_relevance_bounds", "analyze_statistical", "benchmark", "build_graph", "classify",
    "conditional_test", "cv_risk", "drifting_set", "equidistant_time", "fit", "from_array",
    "generate_network", "holm", "hsic_statistic", "hsic_test", "load_csv", "load_labels", "load_report",
    "permutation_importance", "sample", "save_csv", "save_labels", "score", "shadow_relevance",
    "standardize", "table1_specs", "window",
]
