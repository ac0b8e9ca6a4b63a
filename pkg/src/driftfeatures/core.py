"""
Data model for time-stamped samples of (X, T).

A :class:`Dataset` holds an ``n x d`` feature matrix together with a
length-``n`` vector of time stamps. Analyzers never see the time stamps as a
feature; they treat time as the target of an independence or regression
problem.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np


class DataError(ValueError):
    """Raised when input data violate the dataset invariants."""


class FeatureCategory(str, enum.Enum):
    NON_DRIFTING = "N"
    FAITHFULLY_DRIFTING = "F"
    DRIFT_INDUCING = "I"

    @classmethod
    def parse(cls, value: "str | FeatureCategory") -> "FeatureCategory":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().upper())
        except ValueError:
            raise DataError(f"unknown feature category {value!r}; expected N, F or I") from None


CATEGORY_CODES = ("I", "F", "N")


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Feature matrix plus time stamps.

    Parameters
    ----------
    names : sequence of str
        One identifier per feature column.
    values : array_like, shape (n, d)
        Feature values. Must be finite.
    time : array_like, shape (n,)
        Time stamp of every row; needs at least two distinct values.
    constant_columns : tuple of int
        Indices of columns flagged as constant by :func:`standardize`.
    """

    names: tuple[str, ...]
    values: np.ndarray
    time: np.ndarray
    constant_columns: tuple[int, ...] = field(default=())

    def __post_init__(self):
        names = tuple(str(n) for n in self.names)
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        time = np.asarray(self.time, dtype=float).ravel()
        if values.ndim != 2:
            raise DataError("values must be a 2-d matrix")
        n, d = values.shape
        if d < 1:
            raise DataError("dataset needs at least one feature")
        if n < 2:
            raise DataError(f"dataset needs at least 2 rows, got {n}")
        if len(names) != d:
            raise DataError(f"{len(names)} names for {d} feature columns")
        if len(set(names)) != d:
            raise DataError("feature names must be unique")
        if time.shape[0] != n:
            raise DataError(f"time has {time.shape[0]} entries for {n} rows")
        if not np.all(np.isfinite(values)):
            raise DataError("values contain NaN or Inf")
        if not np.all(np.isfinite(time)):
            raise DataError("time contains NaN or Inf")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "values", _readonly(values))
        object.__setattr__(self, "time", _readonly(time))
        object.__setattr__(self, "constant_columns", tuple(int(i) for i in self.constant_columns))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def time_is_constant(self) -> bool:
        return bool(np.ptp(self.time) == 0)

    def require_time_varies(self) -> None:
        if self.time_is_constant():
            raise DataError("time constant: drift is undefined without at least two distinct time stamps")

    def columns(self, subset: Sequence[int]) -> np.ndarray:
        """Return ``X_S`` for an index set ``S`` as an ``(n, |S|)`` matrix."""
        return self.values[:, list(subset)]

    def take_rows(self, rows: np.ndarray) -> "Dataset":
        return Dataset(self.names, self.values[rows], self.time[rows])

    def with_columns(self, names: Sequence[str], values: np.ndarray) -> "Dataset":
        """Return a copy with extra feature columns appended."""
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        return Dataset(self.names + tuple(names), np.hstack([self.values, values]), self.time)


def equidistant_time(n: int) -> np.ndarray:
    """Time stamps ``i / (n - 1)`` for ``i = 0..n-1``."""
    if n < 2:
        raise DataError(f"need at least 2 rows for an equidistant time grid, got {n}")
    return np.arange(n, dtype=float) / (n - 1)


def from_array(values, names: Sequence[str] | None = None, time=None) -> Dataset:
    """Build a dataset from a matrix; time defaults to the equidistant grid."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    if names is None:
        names = [f"X{i}" for i in range(values.shape[1])]
    if time is None:
        time = equidistant_time(values.shape[0])
    return Dataset(tuple(names), values, time)


def load_csv(path, time_column: str | None = None) -> Dataset:
    """Read a comma-separated file with one header row.

    Parameters
    ----------
    path : path-like
        CSV file, UTF-8, '.' as decimal point.
    time_column : str or None
        Name of the column holding time stamps. It is removed from the
        features. ``None`` assigns equidistant time ``i / (n - 1)``.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file, header row missing") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}: line {lineno} has {len(row)} cells, header has {len(header)}")
            parsed = []
            for col, cell in zip(header, row):
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}: non-numeric cell {cell!r} at line {lineno}, column {col!r}"
                    ) from None
                if not math.isfinite(v):
                    raise DataError(f"{path}: missing or non-finite value {cell!r} at line {lineno}, column {col!r}")
                parsed.append(v)
            rows.append(parsed)
    if len(rows) < 2:
        raise DataError(f"{path}: need at least 2 data rows, got {len(rows)}")
    data = np.array(rows, dtype=float)
    if time_column is None:
        return Dataset(tuple(header), data, equidistant_time(len(rows)))
    if time_column not in header:
        raise DataError(f"{path}: time column {time_column!r} not found in header {header}")
    j = header.index(time_column)
    keep = [i for i in range(len(header)) if i != j]
    return Dataset(tuple(header[i] for i in keep), data[:, keep], data[:, j])


def save_csv(ds: Dataset, path, time_column: str = "time") -> None:
    """Write ``ds`` with the time stamps as the first column.

    Values are written with 17 significant digits so that reloading is
    bit-identical.
    """
    if time_column in ds.names:
        raise DataError(f"time column name {time_column!r} clashes with a feature name")
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([time_column, *ds.names])
        for t, row in zip(ds.time, ds.values):
            w.writerow([f"{t:.17g}", *(f"{v:.17g}" for v in row)])


def window(ds: Dataset, t0: float, t1: float) -> Dataset:
    """Restrict ``ds`` to rows with ``t0 <= time <= t1``, preserving order."""
    if t0 > t1:
        raise DataError(f"window start {t0} is after window end {t1}")
    mask = (ds.time >= t0) & (ds.time <= t1)
    k = int(mask.sum())
    if k < 2:
        raise DataError(f"window [{t0}, {t1}] holds {k} row(s); at least 2 are needed")
    return ds.take_rows(np.flatnonzero(mask))


def standardize(ds: Dataset) -> Dataset:
    """Center every column and scale it to unit sample standard deviation.

    Constant columns become all-zero and are listed in
    ``constant_columns`` of the result. Time stamps are left untouched.
    """
    X = ds.values
    C = X - X.mean(axis=0)
    # rescale by the largest deviation first so tiny or huge columns neither
    # underflow nor overflow in the variance
    span = np.max(np.abs(C), axis=0)
    constant = (np.ptp(X, axis=0) == 0) | ~(span > 0)
    C = C / np.where(constant, 1.0, span)
    std = C.std(axis=0, ddof=1)
    constant |= ~(std > 0)
    Z = C / np.where(constant, 1.0, std)
    Z[:, constant] = 0.0
    return Dataset(ds.names, Z, ds.time, tuple(np.flatnonzero(constant)))


def load_labels(path) -> dict[str, FeatureCategory]:
    """Read a ground-truth labels file: JSON object ``name -> "N"|"F"|"I"``."""
    with Path(path).open(encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise DataError(f"{path}: labels file must hold a JSON object")
    return {str(k): FeatureCategory.parse(v) for k, v in raw.items()}


def save_labels(labels: Mapping[str, FeatureCategory | str], path) -> None:
    out = {k: FeatureCategory.parse(v).value for k, v in labels.items()}
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(out, fh, indent=2)


@dataclass
class FeatureRecord:
    name: str
    category: FeatureCategory
    evidence: dict[str, float]


@dataclass
class AnalysisReport:
    """Per-feature categories with the numbers that produced them."""

    method: str
    features: list[FeatureRecord]
    runtime_seconds: float
    config: dict[str, Any] = field(default_factory=dict)
    summary: dict[str, Any] = field(default_factory=dict)

    def categories(self) -> dict[str, FeatureCategory]:
        return {r.name: r.category for r in self.features}

    def indices(self, category: FeatureCategory | str) -> list[int]:
        category = FeatureCategory.parse(category)
        return [i for i, r in enumerate(self.features) if r.category is category]

    def to_dict(self) -> dict[str, Any]:
        return {
            "method": self.method,
            "runtime_seconds": self.runtime_seconds,
            "config": self.config,
            "summary": self.summary,
            "features": [
                {"name": r.name, "category": r.category.value, "evidence": r.evidence}
                for r in self.features
            ],
            "categories": {c: self.indices(c) for c in ("N", "F", "I")},
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "AnalysisReport":
        feats = [
            FeatureRecord(f["name"], FeatureCategory.parse(f["category"]), dict(f.get("evidence", {})))
            for f in raw["features"]
        ]
        return cls(
            method=raw["method"],
            features=feats,
            runtime_seconds=float(raw.get("runtime_seconds", 0.0)),
            config=dict(raw.get("config", {})),
            summary=dict(raw.get("summary", {})),
        )

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), indent=kw.pop("indent", 2), default=_json_default, **kw)

    def __str__(self):
        parts = [f"{c}: {self.indices(c) or '[-]'}" for c in ("N", "F", "I")]
        return f"{self.method}  " + ", ".join(parts)


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, enum.Enum):
        return o.value
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def load_report(path) -> AnalysisReport:
    with Path(path).open(encoding="utf-8") as fh:
        return AnalysisReport.from_dict(json.load(fh))
