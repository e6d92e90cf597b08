"""Agent graphs, interaction matrices and the network learning-rate bound."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components

from .channel import capacity

DEFAULT_RADIUS = 0.35
MAX_RETRIES = 1000


class DisconnectedGraphError(ValueError):
    pass


@dataclass(frozen=True)
class SocialNetwork:
    """Undirected agent graph with its row-stochastic interaction matrix.

    ``weights[i, j] > 0`` exactly when ``i == j`` or ``(i, j)`` is an edge.
    """

    adjacency: np.ndarray
    weights: np.ndarray
    positions: np.ndarray | None = None

    def __post_init__(self):
        adj = np.array(self.adjacency, dtype=bool)
        w = np.array(self.weights, dtype=float)
        n = adj.shape[0]
        if adj.shape != (n, n) or w.shape != (n, n):
            raise ValueError("adjacency and weights must be square and of equal size")
        for arr in (adj, w):
            arr.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)
        object.__setattr__(self, "weights", w)
        if self.positions is not None:
            pos = np.array(self.positions, dtype=float)
            pos.setflags(write=False)
            object.__setattr__(self, "positions", pos)

    @property
    def n_agents(self) -> int:
        return self.adjacency.shape[0]

    def edges(self):
        """Undirected edges ``(i, j)`` with ``i < j``."""
        i, j = np.nonzero(np.triu(self.adjacency, k=1))
        return list(zip(i.tolist(), j.tolist()))

    @classmethod
    def from_adjacency(cls, adjacency, positions=None, rule="equal"):
        adj = _clean_adjacency(adjacency)
        return cls(adj, stochasticize(adj, rule), positions)

    @classmethod
    def isolated(cls, n):
        """``n`` agents that never talk to each other (``A = I``)."""
        return cls(np.zeros((n, n), dtype=bool), np.eye(n))


def _clean_adjacency(adjacency):
    adj = np.array(adjacency, dtype=bool)
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        raise ValueError("adjacency must be square")
    if not np.array_equal(adj, adj.T):
        raise ValueError("adjacency must be symmetric")
    np.fill_diagonal(adj, False)
    return adj


def is_connected(adjacency) -> bool:
    adj = np.asarray(adjacency, dtype=bool)
    if adj.shape[0] <= 1:
        return True
    n_comp, _ = connected_components(adj, directed=False)
    return n_comp == 1


def stochasticize(adjacency, rule: str = "equal") -> np.ndarray:
    """Row-stochastic weights supported on the closed neighbourhood of each node.

    ``rule="equal"`` gives ``1 / (deg(i) + 1)`` to every neighbour and to the
    node itself.  ``rule="metropolis"`` gives ``1 / (1 + max(deg i, deg j))``
    to neighbours and the remainder to the node, which is doubly stochastic.
    """
    adj = _clean_adjacency(adjacency)
    if not is_connected(adj):
        raise DisconnectedGraphError("graph is not connected")
    deg = adj.sum(axis=1)
    n = adj.shape[0]
    if rule == "equal":
        w = (adj | np.eye(n, dtype=bool)) / (deg + 1.0)[:, None]
    elif rule == "metropolis":
        w = np.where(adj, 1.0 / (1.0 + np.maximum(deg[:, None], deg[None, :])), 0.0)
        w[np.diag_indices(n)] = 1.0 - w.sum(axis=1)
    else:
        raise ValueError(f"unknown weight rule {rule!r}")
    return w


def random_geometric_graph(
    n: int,
    radius: float = DEFAULT_RADIUS,
    rng=None,
    *,
    max_retries: int = MAX_RETRIES,
    rule: str = "equal",
) -> SocialNetwork:
    """Connected random geometric graph on ``n`` uniform points in the unit square.

    Whole graphs are resampled until one is connected.

    Raises
    ------
    DisconnectedGraphError
        If ``max_retries`` draws all come out disconnected.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if not 0.0 < radius <= np.sqrt(2.0):
        raise ValueError("radius must lie in (0, sqrt(2)]")
    rng = np.random.default_rng(rng)
    for _ in range(max_retries):
        pos = rng.random((n, 2))
        dist = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
        adj = dist <= radius
        np.fill_diagonal(adj, False)
        if is_connected(adj):
            return SocialNetwork(adj, stochasticize(adj, rule), pos)
    raise DisconnectedGraphError(
        f"no connected graph in {max_retries} draws (n={n}, radius={radius}); increase the radius"
    )


def stationary_distribution(network, tol: float = 1e-12, max_iter: int = 10**6) -> np.ndarray:
    """Left Perron vector of the interaction matrix by power iteration.

    Accepts a :class:`SocialNetwork` or a row-stochastic matrix.
    """
    a = network.weights if isinstance(network, SocialNetwork) else np.asarray(network, float)
    n = a.shape[0]
    v = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = v @ a
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - v)) <= tol:
            return nxt
        v = nxt
    raise RuntimeError("power iteration did not converge; is A irreducible and aperiodic?")


def rate_bound(v, epsilons) -> float:
    """Network learning rate ``K = sum_i v_i C(eps_i)`` in bits per round."""
    v = np.asarray(v, dtype=float)
    eps = np.asarray(epsilons, dtype=float)
    if v.shape != eps.shape:
        raise ValueError("v and epsilons must have the same length")
    return float(np.dot(v, np.atleast_1d(capacity(eps))))


def assign_errors_by_centrality(network, low_eps: float, high_eps: float, n_low: int, tie_tol: float = 1e-9):
    """Give ``low_eps`` to the ``n_low`` most central agents, ``high_eps`` to the rest.

    Centrality is the stationary distribution.  Centralities within
    ``tie_tol`` of each other count as tied and go to the lower index.
    """
    v = network if isinstance(network, np.ndarray) else stationary_distribution(network)
    n = v.size
    if not 0 <= n_low <= n:
        raise ValueError("n_low must lie in [0, N]")
    eps = np.full(n, float(high_eps))
    free = np.ones(n, dtype=bool)
    for _ in range(n_low):
        top = v[free].max()
        pick = np.flatnonzero(free & (v >= top - tie_tol))[0]
        eps[pick] = low_eps
        free[pick] = False
    return eps


def write_edge_list(network: SocialNetwork, path) -> None:
    """Write one ``i j`` line per undirected edge (0-indexed)."""
    with open(path, "w") as fh:
        for i, j in network.edges():
            fh.write(f"{i} {j}\n")


def write_node_table(network: SocialNetwork, epsilons, v, path) -> None:
    """Write ``i,x,y,epsilon,v`` rows as CSV."""
    pos = network.positions
    if pos is None:
        pos = np.full((network.n_agents, 2), np.nan)
    with open(path, "w") as fh:
        fh.write("i,x,y,epsilon,v\n")
        for i in range(network.n_agents):
            row = (pos[i, 0], pos[i, 1], epsilons[i], v[i])
            fh.write(f"{i}," + ",".join(repr(float(x)) for x in row) + "\n")


def read_edge_list(path, n_agents: int) -> np.ndarray:
    adj = np.zeros((n_agents, n_agents), dtype=bool)
    with open(path) as fh:
        for line in fh:
            if line.strip():
                i, j = map(int, line.split())
                adj[i, j] = adj[j, i] = True
    return adj
