"""Slow linear-domain reference implementation used as a test oracle.

Everything here is plain Python over lists of (edge, density) pairs, written
independently of the log-domain kernels in ``distpba.belief``.
"""

import math

import numpy as np


def integral(edges, dens):
    return math.fsum(d * (edges[k + 1] - edges[k]) for k, d in enumerate(dens))


def median(edges, dens):
    half = integral(edges, dens) / 2.0
    acc = 0.0
    for k, d in enumerate(dens):
        m = d * (edges[k + 1] - edges[k])
        if acc + m >= half:
            return edges[k] + (half - acc) / d
        acc += m
    return edges[-1]


def bayes(edges, dens, xq, y, eps):
    """Multiply by 2 l(x, y); the query cell gets the mass-weighted mixture.

    Returns the normalized density and the integral before normalization.
    """
    a = 2 * (1 - eps) if y == 1 else 2 * eps
    b = 2 * eps if y == 1 else 2 * (1 - eps)
    out = []
    for k, d in enumerate(dens):
        lo, hi = edges[k], edges[k + 1]
        if hi <= xq:
            f = a
        elif lo >= xq:
            f = b
        else:
            frac = (xq - lo) / (hi - lo)
            f = frac * a + (1 - frac) * b
        out.append(d * f)
    z = integral(edges, out)
    return [v / z for v in out], z


def split(edges, dens, points):
    """Insert breakpoints, keeping the density of the parent cell."""
    new_edges = sorted(set(edges) | {p for p in points if edges[0] < p < edges[-1]})
    new_dens = []
    for k in range(len(new_edges) - 1):
        mid = 0.5 * (new_edges[k] + new_edges[k + 1])
        new_dens.append(value_at(edges, dens, mid))
    return new_edges, new_dens


def value_at(edges, dens, x):
    for k in range(len(dens)):
        if edges[k] <= x < edges[k + 1]:
            return dens[k]
    return dens[-1]


def geometric(edges, dens_list, row):
    """Normalized prod_j p_j ** w_j and the log2 of its raw integral."""
    raw = []
    for k in range(len(edges) - 1):
        v = 1.0
        for w, dens in zip(row, dens_list):
            if w > 0:
                v *= dens[k] ** w
        raw.append(v)
    z = integral(edges, raw)
    return [v / z for v in raw], math.log2(z)


def arithmetic(edges, dens_list, row):
    raw = [sum(w * dens[k] for w, dens in zip(row, dens_list)) for k in range(len(edges) - 1)]
    z = integral(edges, raw)
    return [v / z for v in raw]


def social_round(edges, dens_list, weights, epsilons, target, rngs, refine=True, mode="social"):
    """One synchronous round for every agent.

    ``rngs`` supply one uniform draw per agent; the true answer is flipped
    when the draw falls below that agent's error probability.
    """
    queries = [median(edges, d) for d in dens_list]
    answers = []
    for i, xq in enumerate(queries):
        z = 1 if target <= xq else 0
        flip = rngs[i].random() < epsilons[i]
        answers.append(z ^ int(flip))
    if refine:
        split_all = [split(edges, d, queries) for d in dens_list]
        edges = split_all[0][0]
        dens_list = [d for _, d in split_all]
    tilde = [bayes(edges, d, queries[i], answers[i], epsilons[i])[0] for i, d in enumerate(dens_list)]
    weights = np.asarray(weights)
    if mode == "social":
        new = [geometric(edges, tilde, weights[i])[0] for i in range(len(tilde))]
    elif mode == "linear":
        new = [arithmetic(edges, tilde, weights[i]) for i in range(len(tilde))]
    else:
        new = tilde
    return edges, new, queries, answers
