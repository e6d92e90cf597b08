"""
Noisy bisection with one agent
==============================

One agent hunts for a hidden point on [0, 1].  Every round it asks whether
the target lies left of its posterior median and gets an answer that is
wrong a quarter of the time.  The belief still concentrates, and log2 of
the density at the target grows at about C(0.25) bits per round.
"""

import numpy as np

from distpba import bayes_update, bisect, capacity, density_at, respond, uniform_belief
from distpba.channel import ResponseOracle

target = 0.6180339887
eps = 0.25
oracle = ResponseOracle(target, [eps], seed=1)

# A uniform prior on 64 cells.  refine_grid splits the queried cell so the
# update stays exact however narrow the belief gets.  Cell edges are stored
# as offsets from an origin; absolute coordinates near 0.6 run out of float
# precision after about 50 bits of concentration, so the origin is placed at
# the target.  It only sets where floats are dense: the search never reads it.
belief = uniform_belief(64, origin=target)
history = []
for t in range(400):
    query = bisect(belief)
    answer = respond(oracle, 0, query)
    belief = bayes_update(belief, query, answer, eps, refine_grid=True)
    history.append(np.log2(density_at(belief, target)))

print(f"after {len(history)} rounds the query point is {bisect(belief).x_hat:.6f} (target {target:.6f})")
print(f"log2 p(target) every 50 rounds: {np.round(history[49::50], 2).tolist()}")

# least-squares growth rate over the last two thirds
t = np.arange(len(history))[len(history) // 3:]
rate = np.polyfit(t, np.asarray(history)[t], 1)[0]
print(f"growth rate {rate:.4f} bits/round, channel capacity C({eps}) = {capacity(eps):.4f}")
