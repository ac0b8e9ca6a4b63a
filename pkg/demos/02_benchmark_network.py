"""
Generate a ground-truth network, sample it, and score both methods.

Uses a small network so the run finishes in well under a minute.
"""

from driftfeatures.core import from_array
from driftfeatures.evalbench import METHODS, run_method, score
from driftfeatures.synth import NetworkSpec, generate_network, sample

net = generate_network(NetworkSpec(d=8, edge_prob=0.3, seed=11))
smp = sample(net, 2000, seed=11)
print("true counts (I, F, N):", net.counts())
print("true labels:", {k: v.value for k, v in smp.labels.items()})

for method in METHODS:
    report = run_method(smp.dataset, method, seed=11)
    s = score(report.categories(), smp.labels)
    print(f"{method:>17}: micro {s.micro:.2f}  F1 {s.f1}  ({report.runtime_seconds:.1f} s)")
