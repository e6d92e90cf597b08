"""Binary symmetric channel responses and capacities."""

from __future__ import annotations

import numpy as np

from .belief import QueryPoint


def binary_entropy(p):
    """Binary entropy in bits, with ``H(0) = H(1) = 0``."""
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -(p * np.log2(p) + (1.0 - p) * np.log2(1.0 - p))
    return np.where((p == 0.0) | (p == 1.0), 0.0, h)


def capacity(epsilon):
    """Capacity ``1 - H(eps)`` of a BSC with crossover probability ``eps`` in (0, 1/2]."""
    eps = np.asarray(epsilon, dtype=float)
    if np.any((eps <= 0.0) | (eps > 0.5)):
        raise ValueError("epsilon must lie in (0, 1/2]")
    c = 1.0 - binary_entropy(eps)
    return float(c) if c.ndim == 0 else c


class ResponseOracle:
    """Hidden target plus one noisy responder per agent.

    Each agent owns an independent generator, so responses for distinct
    agents can be drawn in any order without changing the streams.

    Parameters
    ----------
    target : float
        The hidden target ``X*`` in [0, 1].
    epsilons : array_like
        Per-agent error probabilities in (0, 1/2).
    seed : int or numpy.random.SeedSequence
        Master seed; agent ``i`` draws from the ``i``-th spawned child.
    """

    def __init__(self, target, epsilons, seed=None):
        if not 0.0 <= target <= 1.0:
            raise ValueError("target must lie in [0, 1]")
        eps = np.asarray(epsilons, dtype=float).ravel()
        if np.any((eps <= 0.0) | (eps >= 0.5)):
            raise ValueError("error probabilities must lie in (0, 1/2)")
        if not isinstance(seed, np.random.SeedSequence):
            seed = np.random.SeedSequence(seed)
        self.target = float(target)
        self.epsilons = eps
        self.rngs = [np.random.default_rng(s) for s in seed.spawn(eps.size)]

    @property
    def n_agents(self) -> int:
        return self.epsilons.size

    def true_bit(self, query) -> int:
        return true_bit(self, query)

    def respond(self, agent: int, query) -> int:
        return respond(self, agent, query)

    def respond_offsets(self, offsets, origin):
        """Responses of all agents to queries ``origin + offsets[i]``."""
        return np.array(
            [respond(self, i, QueryPoint(float(u), origin)) for i, u in enumerate(offsets)],
            dtype=np.int8,
        )


def true_bit(oracle: ResponseOracle, query) -> int:
    """1 iff the target lies in ``[0, x_hat]``."""
    if isinstance(query, QueryPoint):
        # comparing offsets keeps the test exact in a target-centred frame
        return int(query.offset >= oracle.target - query.origin)
    return int(oracle.target <= query)


def respond(oracle: ResponseOracle, agent: int, query) -> int:
    """Noisy answer of ``agent``: the true bit flipped with probability eps."""
    if not 0 <= agent < oracle.n_agents:
        raise IndexError(f"agent {agent} out of range for {oracle.n_agents} agents")
    z = true_bit(oracle, query)
    flip = oracle.rngs[agent].random() < oracle.epsilons[agent]
    return z ^ int(flip)
