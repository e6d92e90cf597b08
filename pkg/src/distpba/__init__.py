"""Distributed probabilistic bisection search with social learning.

Agents on a network each query the median of their own belief about a target
in [0, 1], receive answers through a binary symmetric channel, update by Bayes'
rule and then average log-beliefs with their neighbours.
"""

from .belief import (
    BeliefDensity,
    QueryPoint,
    bayes_update,
    bisect,
    density_at,
    geometric_average,
    uniform_belief,
)
from .channel import ResponseOracle, capacity, respond, true_bit
from .engine import (
    AlgorithmVariant,
    ExperimentConfig,
    SimulationState,
    initial_state,
    run_batch,
    run_trial,
    step,
)
from .metrics import TrialTrace, aggregate, mse_avg, mse_max, slope
from .network import (
    SocialNetwork,
    assign_errors_by_centrality,
    random_geometric_graph,
    rate_bound,
    stationary_distribution,
    stochasticize,
)

__version__ = "0.1.0"
