"""
A three-variable chain, analyzed end to end.

Time shifts ``A``; ``B`` follows ``A``; ``C`` follows ``B``. Only ``A`` sees
time directly, so it is the one drift-inducing feature. ``B`` and ``C`` drift
too, but only because of ``A``. A fourth column ``Z`` is unrelated noise.
"""

import numpy as np

from driftfeatures import analyze_relevance_bounds, analyze_statistical, from_array

rng = np.random.default_rng(0)
n = 1500
t = np.linspace(0.0, 1.0, n)
a = 2.0 * t + 0.3 * rng.standard_normal(n)
b = a + 0.3 * rng.standard_normal(n)
c = b + 0.3 * rng.standard_normal(n)
z = rng.standard_normal(n)
ds = from_array(np.column_stack([a, b, c, z]), names=["A", "B", "C", "Z"], time=t)

print("statistical analysis")
print(analyze_statistical(ds))
print()
print("relevance bounds")
print(analyze_relevance_bounds(ds))
