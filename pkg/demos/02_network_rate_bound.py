"""
The network and its rate bound
==============================

Twenty agents are dropped in the unit square and linked when closer than
0.35.  Equal weights over each closed neighbourhood give a row-stochastic
matrix A.  Its stationary distribution v ranks agents by centrality, the two
most central agents get the reliable channel, and

    K = sum_i v_i C(eps_i)

is the rate every agent's belief at the target is guaranteed to reach.
"""

import numpy as np

from distpba import (
    assign_errors_by_centrality,
    capacity,
    random_geometric_graph,
    rate_bound,
    stationary_distribution,
)

net = random_geometric_graph(20, 0.35, np.random.default_rng(3))
v = stationary_distribution(net)
eps = assign_errors_by_centrality(v, low_eps=0.05, high_eps=0.40, n_low=2)

degree = net.adjacency.sum(axis=1)
print(f"{len(net.edges())} edges, degrees {degree.min()}..{degree.max()}")
print("agent  degree  v        eps")
for i in np.argsort(-v)[:5]:
    print(f"{i:5d}  {degree[i]:6d}  {v[i]:.4f}   {eps[i]:.2f}")

# with equal weights v is proportional to degree + 1
print("v matches (deg + 1) / sum:", np.allclose(v, (degree + 1) / (degree + 1).sum()))

k = rate_bound(v, eps)
print(f"K = {k:.4f} bits/round")
print(f"an isolated high-error agent only reaches C(0.4) = {capacity(0.40):.4f}")
print(f"an isolated low-error agent reaches C(0.05) = {capacity(0.05):.4f}")
