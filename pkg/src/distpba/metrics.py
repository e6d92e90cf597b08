"""Per-trial traces and the MSE / concentration-rate statistics computed from them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

JENSEN_TOL = 1e-12


@dataclass(frozen=True)
class TrialTrace:
    """Record of one Monte Carlo trial.

    Attributes
    ----------
    query_points : ndarray, shape (T + 1, N)
        Query point of every agent at rounds ``0..T``.
    log_belief_at_target : ndarray, shape (T + 1, N)
        ``log2 p_{i,t}(X*)``.
    d_terms : ndarray, shape (T, N)
        log2 normalizer of each averaging step (0 when no averaging happens).
    target : float
        The hidden target ``X*``.
    """

    query_points: np.ndarray
    log_belief_at_target: np.ndarray
    d_terms: np.ndarray
    target: float
    variant: str = ""

    def __post_init__(self):
        q = np.asarray(self.query_points, dtype=float)
        lb = np.asarray(self.log_belief_at_target, dtype=float)
        d = np.asarray(self.d_terms, dtype=float).reshape(-1, q.shape[1] if q.ndim == 2 else 1)
        if q.ndim != 2 or lb.shape != q.shape or d.shape != (q.shape[0] - 1, q.shape[1]):
            raise ValueError("inconsistent trace dimensions")
        object.__setattr__(self, "query_points", q)
        object.__setattr__(self, "log_belief_at_target", lb)
        object.__setattr__(self, "d_terms", d)

    @property
    def horizon(self) -> int:
        return self.query_points.shape[0] - 1

    @property
    def n_agents(self) -> int:
        return self.query_points.shape[1]

    def squared_errors(self) -> np.ndarray:
        return (self.query_points - self.target) ** 2

    def jensen_violations(self, tol: float = JENSEN_TOL) -> int:
        return int(np.count_nonzero(self.d_terms > tol))


def _check_round(trace, t):
    if not 0 <= t <= trace.horizon:
        raise IndexError(f"round {t} outside 0..{trace.horizon}")


def mse_avg(trace: TrialTrace, t: int) -> float:
    """Network-average squared query error at round ``t``."""
    _check_round(trace, t)
    return float(np.mean((trace.query_points[t] - trace.target) ** 2))


def mse_max(trace: TrialTrace, t: int) -> float:
    """Worst-agent squared query error at round ``t``."""
    _check_round(trace, t)
    return float(np.max((trace.query_points[t] - trace.target) ** 2))


def default_window(horizon: int) -> tuple[int, int]:
    """Last two-thirds of the run, skipping the early transient."""
    return horizon // 3, horizon


def ols_slope(y, t=None) -> float:
    y = np.asarray(y, dtype=float)
    t = np.arange(y.size, dtype=float) if t is None else np.asarray(t, dtype=float)
    tc = t - t.mean()
    return float(np.dot(tc, y - y.mean()) / np.dot(tc, tc))


def slope(trace: TrialTrace, agent: int, window=None) -> float:
    """Least-squares slope of ``log2 p_{agent,t}(X*)`` over rounds ``t0..t1`` inclusive."""
    t0, t1 = default_window(trace.horizon) if window is None else window
    if not 0 <= t0 < t1 <= trace.horizon:
        raise ValueError(f"bad window ({t0}, {t1}) for horizon {trace.horizon}")
    if t1 - t0 + 1 < 3:
        raise ValueError("slope window needs at least 3 rounds")
    t = np.arange(t0, t1 + 1)
    return ols_slope(trace.log_belief_at_target[t0:t1 + 1, agent], t)


@dataclass(frozen=True)
class Summary:
    """Across-trial means and standard errors."""

    mse_avg_mean: np.ndarray
    mse_max_mean: np.ndarray
    stderr_avg: np.ndarray
    stderr_max: np.ndarray
    slope_mean: np.ndarray
    slope_stderr: np.ndarray
    n_trials: int


def _mean_stderr(x):
    mean = x.mean(axis=0)
    if x.shape[0] < 2:
        return mean, np.zeros_like(mean)
    return mean, x.std(axis=0, ddof=1) / np.sqrt(x.shape[0])


def aggregate(traces, window=None) -> Summary:
    """Average the per-round MSE curves and per-agent slopes over trials."""
    traces = list(traces)
    if not traces:
        raise ValueError("no traces to aggregate")
    shape = traces[0].query_points.shape
    if any(tr.query_points.shape != shape for tr in traces):
        raise ValueError("traces have inconsistent dimensions")
    sq = np.stack([tr.squared_errors() for tr in traces])
    avg, se_avg = _mean_stderr(sq.mean(axis=2))
    mx, se_max = _mean_stderr(sq.max(axis=2))
    horizon = shape[0] - 1
    if horizon >= 2:
        slopes = np.array([[slope(tr, i, window) for i in range(shape[1])] for tr in traces])
        s_mean, s_se = _mean_stderr(slopes)
    else:
        s_mean = s_se = np.full(shape[1], np.nan)
    return Summary(avg, mx, se_avg, se_max, s_mean, s_se, len(traces))
