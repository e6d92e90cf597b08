"""
Concentration rates and why the grid must refine
================================================

Each agent's log2 p(target) should grow at least as fast as the bound K.
On a fixed grid of M cells the density can never exceed M, so log2 p stalls
at log2 M and the measured slope collapses to zero.  Refining the partition
at each round's query points removes that ceiling.
"""

import numpy as np

from distpba import ExperimentConfig, aggregate, rate_bound, run_batch
from distpba.engine import build_network, network_epsilons

base = ExperimentConfig(variant="social", n_trials=10, horizon=150, master_seed=2)
eps, v = network_epsilons(base, build_network(base))
k = rate_bound(v, eps)

for refine in (True, False):
    config = ExperimentConfig(**{**base.__dict__, "refine": refine})
    results, _ = run_batch(config)
    traces = results["social"]
    slopes = aggregate(traces).slope_mean
    peak = max(tr.log_belief_at_target.max() for tr in traces)
    label = "refined grid" if refine else f"fixed grid M={config.grid_size}"
    print(f"{label:22s} slopes {slopes.min():.3f}..{slopes.max():.3f}  peak log2 p {peak:6.1f}")

print(f"bound K = {k:.3f}; fixed-grid ceiling log2 M = {np.log2(base.grid_size):.0f}")
