"""
Real macroeconomic series with two appended noise columns.

Quarterly US macro data drift strongly over time. The two appended columns
are pure noise at different scales and should come out non-drifting.
"""

import numpy as np
import statsmodels.api as sm

from driftfeatures import Dataset, analyze_statistical
from driftfeatures.core import equidistant_time

frame = sm.datasets.macrodata.load_pandas().data.drop(columns=["year", "quarter"])
X = frame.to_numpy(dtype=float)
n = X.shape[0]
rng = np.random.default_rng(3)
X = np.column_stack([X, rng.standard_normal(n), 10.0 * rng.standard_normal(n)])
names = tuple(frame.columns) + ("noise_sd1", "noise_sd10")
ds = Dataset(names, X, equidistant_time(n))
report = analyze_statistical(ds)
for name, cat in report.categories().items():
    print(f"{name:>12}: {cat.value}")
