"""Piecewise-constant posterior densities on [0, 1] stored in the log2 domain.

A belief is a partition of the unit interval (``edges``) together with one
log2-density value per cell.  Edges are stored as *offsets* from ``origin``;
the absolute location of an edge is ``origin + edge``.  With ``origin = 0``
this is the plain unit interval.  The simulation engine centres the frame on
the hidden target so that cells around it can shrink far below the spacing of
doubles near 0.5 without losing resolution.

Two levels of API live here:

* scalar operations on :class:`BeliefDensity` (``bisect``, ``bayes_update``,
  ``geometric_average``, ``density_at``), and
* batched array kernels (``medians``, ``refine``, ``apply_bayes``,
  ``average_log_beliefs``, ``mix_beliefs``) working on an ``(n_agents, cells)``
  matrix of log-densities over a shared partition.  The scalar operations are
  thin wrappers over the kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

LOG_FLOOR = -60.0
DEFAULT_GRID_SIZE = 4096
MEDIAN_TOL = 1e-6
WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class BeliefDensity:
    """Piecewise-constant density over a partition of [0, 1].

    Parameters
    ----------
    edges : ndarray, shape (M + 1,)
        Strictly increasing cell boundaries, as offsets from ``origin``.
    log_density : ndarray, shape (M,)
        log2 of the density on each cell.
    origin : float
        Absolute coordinate corresponding to offset 0.
    """

    edges: np.ndarray
    log_density: np.ndarray
    origin: float = 0.0

    def __post_init__(self):
        edges = np.array(self.edges, dtype=float)
        logd = np.array(self.log_density, dtype=float)
        if edges.ndim != 1 or logd.ndim != 1 or edges.size != logd.size + 1:
            raise ValueError("edges must have exactly one more entry than log_density")
        if logd.size < 1:
            raise ValueError("a belief needs at least one cell")
        if np.any(np.diff(edges) <= 0):
            raise ValueError("edges must be strictly increasing")
        if not np.all(np.isfinite(logd)):
            raise ValueError("log_density must be finite")
        edges.setflags(write=False)
        logd.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "log_density", logd)
        object.__setattr__(self, "origin", float(self.origin))

    @property
    def grid_size(self) -> int:
        return self.log_density.size

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def density(self) -> np.ndarray:
        return np.exp2(self.log_density)

    def integral(self) -> float:
        return float(np.exp2(log_integral(self.log_density, self.widths)))

    def cdf(self, x: float) -> float:
        """Probability mass of ``[0, x]``."""
        u = _check_x(x) - self.origin
        mass = self.density * self.widths
        k = _cell_index(self.edges, u)
        below = mass[:k].sum()
        frac = np.clip((u - self.edges[k]) / self.widths[k], 0.0, 1.0)
        return float(below + frac * mass[k])


@dataclass(frozen=True)
class QueryPoint:
    """A query location ``x_hat = origin + offset``; the queried set is ``[0, x_hat]``."""

    offset: float
    origin: float = field(default=0.0)

    @property
    def x_hat(self) -> float:
        return float(min(max(self.origin + self.offset, 0.0), 1.0))


def _check_x(x):
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x={x} outside [0, 1]")
    return float(x)


def _cell_index(edges, u):
    # half-open cells [e_k, e_{k+1}); the last cell is closed on the right
    k = np.searchsorted(edges, u, side="right") - 1
    return np.clip(k, 0, edges.size - 2)


def _check_epsilon(eps):
    eps = np.asarray(eps, dtype=float)
    if np.any((eps <= 0.0) | (eps >= 0.5)):
        raise ValueError("error probabilities must lie in (0, 1/2)")
    return eps


# ---------------------------------------------------------------------------
# batched kernels
# ---------------------------------------------------------------------------
# Kernels take an (n, M) stack over shared edges.  ``widths`` may be passed
# in when the caller already has ``np.diff(edges)``.


def log_integral(log_density, widths):
    """log2 of the integral of each density, via a shifted log-sum-exp."""
    lm = np.asarray(log_density) + np.log2(widths)
    m = lm.max(axis=-1, keepdims=True)
    out = m + np.log2(np.exp2(lm - m).sum(axis=-1, keepdims=True))
    return out[..., 0]


def normalize(log_density, widths, floor=LOG_FLOOR):
    """Renormalize to unit integral and clamp at ``floor``.

    Returns the normalized log-densities and the log2-integral that was
    subtracted.  Clamping adds at most ``2**floor`` of mass, so the result
    stays normalized far inside any tolerance used here.
    """
    d = log_integral(log_density, widths)
    out = log_density - d[..., None]
    if floor is not None:
        np.maximum(out, floor, out=out)
    return out, d


def medians(edges, log_density, widths=None):
    """Median offset of each density in a ``(n, M)`` stack.

    The CDF is piecewise linear, so interpolating inside the crossing cell is
    exact.
    """
    logd = np.atleast_2d(log_density)
    if widths is None:
        widths = np.diff(edges)
    mass = logd + np.log2(widths)
    mass -= mass.max(axis=1, keepdims=True)
    np.exp2(mass, out=mass)
    cum = np.cumsum(mass, axis=1)
    out = np.empty(logd.shape[0])
    last = logd.shape[1] - 1
    for i in range(logd.shape[0]):
        half = 0.5 * cum[i, -1]
        k = min(int(np.searchsorted(cum[i], half)), last)
        m_k = mass[i, k]
        frac = min(max((half - (cum[i, k] - m_k)) / m_k, 0.0), 1.0)
        out[i] = edges[k] + frac * widths[k]
    return out


def refine(edges, log_density, points):
    """Insert ``points`` as breakpoints, copying each parent cell's density."""
    pts = np.unique(points) if len(points) > 1 else np.asarray(points, dtype=float)
    pos = np.searchsorted(edges, pts)
    fresh = (pos > 0) & (pos < edges.size)
    fresh[fresh] = edges[pos[fresh]] != pts[fresh]
    if not fresh.all():
        pts, pos = pts[fresh], pos[fresh]
        if pts.size == 0:
            return edges, log_density
    logd = np.asarray(log_density)
    return np.insert(edges, pos, pts), np.insert(logd, pos, logd[..., pos - 1], axis=-1)


def coarsen(edges, log_density):
    """Drop breakpoints whose neighbouring cells agree in every row.

    The represented densities are unchanged; only redundant cells go away.
    """
    logd = np.atleast_2d(log_density)
    if logd.shape[1] < 2:
        return edges, log_density
    keep = np.empty(logd.shape[1], dtype=bool)
    keep[0] = True
    np.any(logd[:, 1:] != logd[:, :-1], axis=0, out=keep[1:])
    if keep.all():
        return edges, log_density
    return np.append(edges[:-1][keep], edges[-1]), logd[:, keep]


def likelihood_logs(responses, epsilons):
    """log2 of the factor ``2 l(x, y)`` at or below the query point and above it."""
    eps = _check_epsilon(epsilons)
    y = np.asarray(responses)
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("responses must be 0 or 1")
    hi = np.log2(2.0 * (1.0 - eps))
    lo = np.log2(2.0 * eps)
    return np.where(y == 1, hi, lo), np.where(y == 1, lo, hi)


def apply_bayes(edges, log_density, offsets, responses, epsilons, floor=LOG_FLOOR):
    """Multiply each density by ``2 l(x, y)`` and renormalize.

    Cells entirely at or below the query point get the "inside" factor,
    cells above get the "outside" factor.  A cell straddling the query point
    gets the mass-weighted mixture of both.

    Returns
    -------
    log_density : ndarray
        Updated, normalized log-densities.
    pre_log_integral : ndarray
        log2 of the integral before renormalization.  It is 0 whenever the
        query point is the exact median.
    """
    logd = np.atleast_2d(log_density)
    n = logd.shape[0]
    offsets = np.broadcast_to(np.asarray(offsets, dtype=float), (n,))
    inside, outside = likelihood_logs(
        np.broadcast_to(responses, (n,)), np.broadcast_to(epsilons, (n,))
    )
    return bayes_kernel(edges, np.diff(edges), logd, offsets, inside, outside, floor)


def bayes_kernel(edges, widths, logd, offsets, inside, outside, floor=LOG_FLOOR):
    """Unchecked core of :func:`apply_bayes` with precomputed log factors."""
    n, m = logd.shape
    k = np.searchsorted(edges, offsets, side="right") - 1
    out = np.empty_like(logd)
    for i in range(n):
        j = min(max(int(k[i]), 0), m)
        a, b = float(inside[i]), float(outside[i])
        np.add(logd[i, :j], a, out=out[i, :j])
        np.add(logd[i, j:], b, out=out[i, j:])
        if j == k[i] < m:
            frac = min(max((float(offsets[i]) - edges[j]) / widths[j], 0.0), 1.0)
            if frac > 0.0:
                out[i, j] = logd[i, j] + math.log2(frac * 2.0**a + (1.0 - frac) * 2.0**b)
    return normalize(out, widths, floor)


def prepare_weights(weights):
    """Validate a row-stochastic weight matrix and return it in CSR form."""
    w = sparse.csr_array(weights, dtype=float)
    if np.any(w.data < 0):
        raise ValueError("weights must be nonnegative")
    sums = np.asarray(w.sum(axis=1)).ravel()
    if np.any(np.abs(sums - 1.0) > WEIGHT_TOL):
        raise ValueError("each weight row must sum to 1")
    w.sort_indices()
    return w


def _as_weights(weights, n):
    w = weights if isinstance(weights, sparse.csr_array) else prepare_weights(weights)
    if w.shape[1] != n:
        raise ValueError(f"weights have {w.shape[1]} columns for {n} beliefs")
    return w


def _identity_rows(w):
    """Map row -> source column for rows that put all weight on one belief."""
    nnz = np.diff(w.indptr)
    out = {}
    for i in np.flatnonzero(nnz == 1):
        j = w.indptr[i]
        if w.data[j] == 1.0:
            out[int(i)] = int(w.indices[j])
    return out


def average_log_beliefs(edges, log_density, weights, floor=LOG_FLOOR, widths=None):
    """Weighted geometric averaging of densities, one output per weight row.

    Returns the normalized log-densities and, per row, ``D`` = log2 of the
    pre-normalization integral.  ``D <= 0`` by Jensen's inequality.  Rows
    with a single unit weight copy their source belief verbatim with
    ``D = 0``.
    """
    logd = np.atleast_2d(log_density)
    w = _as_weights(weights, logd.shape[0])
    if widths is None:
        widths = np.diff(edges)
    out, d = normalize(w @ logd, widths, floor)
    for i, j in _identity_rows(w).items():
        out[i] = logd[j]
        d[i] = 0.0
    return out, d


def mix_beliefs(edges, log_density, weights, floor=LOG_FLOOR, widths=None):
    """Arithmetic mixture ``sum_j w_ij p_j`` of densities, per weight row."""
    logd = np.atleast_2d(log_density)
    w = _as_weights(weights, logd.shape[0])
    if widths is None:
        widths = np.diff(edges)
    raw = np.empty((w.shape[0], logd.shape[1]))
    for i in range(w.shape[0]):
        cols = w.indices[w.indptr[i]:w.indptr[i + 1]]
        vals = w.data[w.indptr[i]:w.indptr[i + 1]]
        rows = logd[cols]
        peak = rows.max(axis=0)
        raw[i] = peak + np.log2(vals @ np.exp2(rows - peak))
    out, _ = normalize(raw, widths, floor)
    for i, j in _identity_rows(w).items():
        out[i] = logd[j]
    return out


# ---------------------------------------------------------------------------
# scalar API
# ---------------------------------------------------------------------------


def uniform_belief(grid_size: int = DEFAULT_GRID_SIZE, origin: float = 0.0) -> BeliefDensity:
    """Uniform density on [0, 1] over ``grid_size`` equal cells."""
    if int(grid_size) != grid_size or grid_size < 2:
        raise ValueError("grid_size must be an integer >= 2")
    edges = np.linspace(0.0, 1.0, int(grid_size) + 1) - origin
    return BeliefDensity(edges, np.zeros(int(grid_size)), origin)


def bisect(belief: BeliefDensity) -> QueryPoint:
    """Return the median ``F^{-1}(1/2)`` of ``belief``."""
    u = medians(belief.edges, belief.log_density)[0]
    return QueryPoint(float(u), belief.origin)


def _query_offset(belief, query):
    if isinstance(query, QueryPoint):
        if query.origin == belief.origin:
            return query.offset
        return query.origin + query.offset - belief.origin
    return _check_x(query) - belief.origin


def bayes_update(
    belief: BeliefDensity,
    query,
    response: int,
    epsilon: float,
    *,
    refine_grid: bool = False,
    check: bool = True,
) -> BeliefDensity:
    """Posterior after observing ``response`` to the query ``[0, x_hat]``.

    With ``refine_grid`` the query point is first inserted as a breakpoint,
    which makes the update exact.  Otherwise the cell holding the query point
    receives the mass-weighted mixture of the two likelihood factors.

    Raises ``ValueError`` if ``check`` is set and the query is not the median
    (the factor-2 update of a median query is already normalized).
    """
    if response not in (0, 1):
        raise ValueError("response must be 0 or 1")
    _check_epsilon(epsilon)
    u = _query_offset(belief, query)
    edges, logd = belief.edges, belief.log_density[None, :]
    if refine_grid:
        edges, logd = refine(edges, logd, [u])
    out, pre = apply_bayes(edges, logd, u, response, epsilon)
    if check and abs(np.exp2(pre[0]) - 1.0) > MEDIAN_TOL:
        raise ValueError(
            f"query is not the median: updated integral {np.exp2(pre[0])!r} != 1 "
            "(if the belief is very concentrated, its cells may be below float "
            "resolution; choose an origin near the mass)"
        )
    return BeliefDensity(edges, out[0], belief.origin)


def geometric_average(beliefs, weights):
    """Normalized weighted geometric mean of ``beliefs``.

    Returns
    -------
    belief : BeliefDensity
    d_term : float
        log2 of the integral before normalization (never positive).
    """
    beliefs = list(beliefs)
    if not beliefs:
        raise ValueError("need at least one belief")
    first = beliefs[0]
    for b in beliefs[1:]:
        if b.grid_size != first.grid_size or not np.array_equal(b.edges, first.edges):
            raise ValueError("beliefs must share the same grid")
        if b.origin != first.origin:
            raise ValueError("beliefs must share the same origin")
    weights = np.atleast_2d(np.asarray(weights, dtype=float))
    if weights.shape != (1, len(beliefs)):
        raise ValueError("weights must be a single row with one entry per belief")
    if np.any(weights < 0):
        raise ValueError("weights must be nonnegative")
    if abs(weights.sum() - 1.0) > WEIGHT_TOL:
        raise ValueError("weights must sum to 1")
    stack = np.stack([b.log_density for b in beliefs])
    out, d = average_log_beliefs(first.edges, stack, weights)
    return BeliefDensity(first.edges, out[0], first.origin), float(d[0])


def density_at(belief: BeliefDensity, x: float) -> float:
    """Density at absolute location ``x``; x = 1 falls in the last cell."""
    u = _check_x(x) - belief.origin
    return float(np.exp2(belief.log_density[_cell_index(belief.edges, u)]))


def log_density_at_offset(edges, log_density, offset=0.0):
    """log2-density of each row at ``offset`` (defaults to the frame origin)."""
    k = _cell_index(edges, offset)
    return np.atleast_2d(log_density)[:, k]
