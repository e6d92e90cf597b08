"""Synchronous rounds of the distributed bisection search and its baselines.

Every round has two stages.  Stage 1: each agent queries its posterior
median, receives a noisy answer and applies the Bayes update.  Stage 2
combines the updated beliefs over the network, either by weighted geometric
averaging (``social``), arithmetic mixing (``linear``) or not at all
(``no-collab``).

All agents share one partition of the target interval.  When ``refine`` is
on, every round's query points are added to it so the Bayes update is exact,
and the partition is expressed in a frame centred on the hidden target.
"""

from __future__ import annotations

import enum
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import belief as bl
from .channel import ResponseOracle
from .metrics import TrialTrace
from .network import (
    DEFAULT_RADIUS,
    MAX_RETRIES,
    SocialNetwork,
    assign_errors_by_centrality,
    random_geometric_graph,
    stationary_distribution,
)

# spawn-key tags for seed derivation
_NETWORK, _TARGET, _AGENTS = 0, 1, 2


class AlgorithmVariant(str, enum.Enum):
    SOCIAL = "social"
    NO_COLLAB = "no-collab"
    LINEAR = "linear"


@dataclass
class ExperimentConfig:
    """Every knob of an experiment; the defaults are the 20-agent setup."""

    n_agents: int = 20
    grid_size: int = bl.DEFAULT_GRID_SIZE
    horizon: int = 75
    n_trials: int = 150
    radius: float = DEFAULT_RADIUS
    low_eps: float = 0.05
    high_eps: float = 0.40
    n_low: int = 2
    variant: str = "all"
    master_seed: int = 0
    network_mode: str = "fixed"
    output_dir: str = "pba_out"
    weight_rule: str = "equal"
    refine: bool = True
    target: float | None = None
    max_retries: int = MAX_RETRIES

    def variants(self) -> list[AlgorithmVariant]:
        if self.variant == "all":
            return list(AlgorithmVariant)
        return [AlgorithmVariant(self.variant)]

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


@dataclass
class SimulationState:
    """Beliefs of all agents at the start of a round.

    ``log_density`` has one row per agent over the shared ``edges`` (offsets
    from ``origin``).  ``d_terms`` holds the normalizers of the averaging
    step that produced this state.
    """

    round: int
    edges: np.ndarray
    log_density: np.ndarray
    origin: float
    oracle: ResponseOracle
    network: SocialNetwork
    refine: bool = True
    d_terms: np.ndarray | None = None
    mixing: object = field(default=None, repr=False)
    widths: np.ndarray = field(init=False, repr=False)
    query_offsets: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.mixing is None:
            self.mixing = bl.prepare_weights(self.network.weights)
        # ufunc SIMD paths differ by memory layout; fix it for bitwise reproducibility
        self.log_density = np.ascontiguousarray(self.log_density)
        self.widths = np.diff(self.edges)
        self.query_offsets = bl.medians(self.edges, self.log_density, self.widths)

    @property
    def n_agents(self) -> int:
        return self.log_density.shape[0]

    @property
    def beliefs(self) -> list[bl.BeliefDensity]:
        return [bl.BeliefDensity(self.edges, row, self.origin) for row in self.log_density]

    def query_points(self) -> np.ndarray:
        return np.clip(self.origin + self.query_offsets, 0.0, 1.0)

    def log_belief_at_target(self) -> np.ndarray:
        u = self.oracle.target - self.origin
        k = min(max(int(np.searchsorted(self.edges, u, side="right")) - 1, 0), self.widths.size - 1)
        return self.log_density[:, k]


def initial_state(network, oracle, grid_size=bl.DEFAULT_GRID_SIZE, *, refine=True, origin=None):
    """Uniform priors for every agent; the frame is centred on the target by default."""
    origin = oracle.target if origin is None else origin
    prior = bl.uniform_belief(grid_size, origin)
    logd = np.zeros((network.n_agents, prior.grid_size))
    return SimulationState(0, prior.edges, logd, origin, oracle, network, refine)


def step(state: SimulationState, variant=AlgorithmVariant.SOCIAL, responses=None) -> SimulationState:
    """Advance every agent by one synchronous round."""
    variant = AlgorithmVariant(variant)
    offsets = state.query_offsets
    if responses is None:
        responses = state.oracle.respond_offsets(offsets, state.origin)
    else:
        responses = np.asarray(responses)
        if not np.all((responses == 0) | (responses == 1)):
            raise ValueError("responses must be 0 or 1")
    edges, logd, widths = state.edges, state.log_density, state.widths
    if state.refine:
        edges, logd = bl.refine(edges, logd, offsets)
        widths = np.diff(edges)
    hi, lo = _log_factors(state.oracle.epsilons)
    inside = np.where(responses == 1, hi, lo)
    outside = np.where(responses == 1, lo, hi)
    logd, pre = bl.bayes_kernel(edges, widths, logd, offsets, inside, outside)
    if np.any(np.abs(pre) > bl.MEDIAN_TOL):
        raise RuntimeError(f"Bayes update lost normalization at round {state.round}: {pre}")

    d = np.zeros(state.n_agents)
    if variant is AlgorithmVariant.SOCIAL:
        logd, d = bl.average_log_beliefs(edges, logd, state.mixing, widths=widths)
    elif variant is AlgorithmVariant.LINEAR:
        logd = bl.mix_beliefs(edges, logd, state.mixing, widths=widths)
    if state.refine:
        edges, logd = bl.coarsen(edges, logd)
    return SimulationState(
        state.round + 1, edges, logd, state.origin, state.oracle, state.network,
        state.refine, d, state.mixing,
    )


def _log_factors(eps):
    return np.log2(2.0 * (1.0 - eps)), np.log2(2.0 * eps)


def _seed(master_seed, *key):
    return np.random.SeedSequence(master_seed, spawn_key=key)


def build_network(config: ExperimentConfig, trial: int | None = None) -> SocialNetwork:
    """Network for a fixed-mode experiment (``trial=None``) or for one trial."""
    key = (_NETWORK,) if trial is None else (_NETWORK, trial)
    rng = np.random.default_rng(_seed(config.master_seed, *key))
    return random_geometric_graph(
        config.n_agents, config.radius, rng, max_retries=config.max_retries, rule=config.weight_rule
    )


def network_epsilons(config: ExperimentConfig, network: SocialNetwork):
    v = stationary_distribution(network)
    return assign_errors_by_centrality(v, config.low_eps, config.high_eps, config.n_low), v


def run_trial(config: ExperimentConfig, trial: int, variant=None, network=None) -> TrialTrace:
    """Run one seeded trial for ``horizon`` rounds and record its trace.

    The target and response streams depend only on ``(master_seed, trial)``,
    so every variant sees the same target and the same random draws.
    """
    variant = AlgorithmVariant(variant or config.variants()[0])
    if network is None:
        network = build_network(config, None if config.network_mode == "fixed" else trial)
    eps, _ = network_epsilons(config, network)
    if config.target is None:
        target = float(np.random.default_rng(_seed(config.master_seed, _TARGET, trial)).random())
    else:
        target = float(config.target)
    oracle = ResponseOracle(target, eps, _seed(config.master_seed, _AGENTS, trial))
    origin = target if config.refine else 0.0
    state = initial_state(network, oracle, config.grid_size, refine=config.refine, origin=origin)

    T, n = config.horizon, network.n_agents
    queries = np.empty((T + 1, n))
    at_target = np.empty((T + 1, n))
    d_terms = np.empty((T, n))
    queries[0] = state.query_points()
    at_target[0] = state.log_belief_at_target()
    for t in range(T):
        state = step(state, variant)
        queries[t + 1] = state.query_points()
        at_target[t + 1] = state.log_belief_at_target()
        d_terms[t] = state.d_terms
    return TrialTrace(queries, at_target, d_terms, target, variant.value)


def worker_count() -> int:
    """Worker pool size from ``PBA_THREADS`` (default: CPU count)."""
    raw = os.environ.get("PBA_THREADS")
    if raw:
        return max(1, int(raw))
    return os.cpu_count() or 1


def run_batch(config: ExperimentConfig, variants=None, threads=None):
    """Run every trial of every variant.

    Returns a dict ``variant -> list of traces`` in trial order plus the
    network used for trial 0.  Results do not depend on ``threads``.
    """
    variants = [AlgorithmVariant(v) for v in (variants or config.variants())]
    threads = threads or worker_count()
    fixed = build_network(config) if config.network_mode == "fixed" else None
    networks = [fixed or build_network(config, t) for t in range(config.n_trials)]
    jobs = [(v, t) for v in variants for t in range(config.n_trials)]

    def work(job):
        v, t = job
        return run_trial(config, t, v, networks[t])

    if threads == 1:
        traces = [work(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            traces = list(pool.map(work, jobs))
    out = {v: [] for v in variants}
    for (v, _), tr in zip(jobs, traces):
        out[v].append(tr)
    return out, networks[0] if networks else build_network(config)


def with_overrides(config: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(config, **{k: v for k, v in kw.items() if v is not None})
