"""Command-line experiment runner writing CSV results.

Usage::

    python -m distpba --variant all --trials 150 --horizon 75 --out results/
    python -m distpba --config experiment.cfg --seed 7

A config file holds ``key = value`` lines using :class:`ExperimentConfig`
field names; ``#`` starts a comment.  Command-line flags override the file.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys
from dataclasses import asdict

import numpy as np

from .channel import capacity
from .engine import AlgorithmVariant, ExperimentConfig, build_network, network_epsilons, run_batch
from .metrics import aggregate
from .network import rate_bound, write_edge_list, write_node_table

log = logging.getLogger(__name__)


def _parse_bool(text):
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_optional_float(text):
    return None if str(text).strip().lower() in ("", "none") else float(text)


_PARSERS = {
    "n_agents": int,
    "grid_size": int,
    "horizon": int,
    "n_trials": int,
    "radius": float,
    "low_eps": float,
    "high_eps": float,
    "n_low": int,
    "variant": str,
    "master_seed": int,
    "network_mode": str,
    "output_dir": str,
    "weight_rule": str,
    "refine": _parse_bool,
    "target": _parse_optional_float,
    "max_retries": int,
}


class ConfigError(ValueError):
    pass


def load_config(path) -> dict:
    """Read ``key = value`` lines into typed config overrides."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in _PARSERS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                out[key] = _PARSERS[key](value)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
    return out


def validate(config: ExperimentConfig) -> list[str]:
    """Every range or consistency violation in ``config``; empty means valid."""
    errs = []

    def need(ok, msg):
        if not ok:
            errs.append(msg)

    need(config.n_agents >= 1, f"n_agents={config.n_agents} must be >= 1")
    need(config.grid_size >= 2, f"grid_size={config.grid_size} must be >= 2")
    need(config.horizon >= 0, f"horizon={config.horizon} must be >= 0")
    need(config.n_trials >= 1, f"n_trials={config.n_trials} must be >= 1")
    need(0.0 < config.radius <= math.sqrt(2.0), f"radius={config.radius} outside (0, sqrt(2)]")
    for name in ("low_eps", "high_eps"):
        val = getattr(config, name)
        need(0.0 < val < 0.5, f"{name}={val} outside (0, 0.5)")
    need(0 <= config.n_low <= config.n_agents,
         f"n_low={config.n_low} outside [0, n_agents={config.n_agents}]")
    variants = [v.value for v in AlgorithmVariant] + ["all"]
    need(config.variant in variants, f"variant={config.variant!r} not in {variants}")
    need(config.network_mode in ("fixed", "per-trial"),
         f"network_mode={config.network_mode!r} not in ['fixed', 'per-trial']")
    need(config.weight_rule in ("equal", "metropolis"),
         f"weight_rule={config.weight_rule!r} not in ['equal', 'metropolis']")
    need(config.target is None or 0.0 <= config.target <= 1.0,
         f"target={config.target} outside [0, 1]")
    need(config.max_retries >= 1, f"max_retries={config.max_retries} must be >= 1")
    need(0 <= config.master_seed < 2**64, f"master_seed={config.master_seed} outside [0, 2**64)")
    return errs


def _fmt(x) -> str:
    return repr(float(x))


def _network_stats(config, networks):
    """Per-agent epsilon, centrality and capacity, plus K, averaged over networks."""
    rows = []
    for net in networks:
        eps, v = network_epsilons(config, net)
        rows.append((eps, v, np.atleast_1d(capacity(eps)), rate_bound(v, eps)))
    eps, v, caps, k = (np.mean(col, axis=0) for col in zip(*rows))
    return eps, v, caps, float(k)


def run(config: ExperimentConfig, threads=None) -> int:
    """Run the experiment and write its CSV files; returns an exit status."""
    errs = validate(config)
    if errs:
        for e in errs:
            log.error("config: %s", e)
        return 2
    try:
        os.makedirs(config.output_dir, exist_ok=True)
    except OSError as exc:
        log.error("cannot create %s: %s", config.output_dir, exc)
        return 1

    results, network = run_batch(config, threads=threads)
    if config.network_mode == "fixed":
        stats = _network_stats(config, [network])
    else:
        stats = _network_stats(config, [build_network(config, t) for t in range(config.n_trials)])

    out = config.output_dir
    try:
        write_edge_list(network, os.path.join(out, "network.edges"))
        eps0, v0 = network_epsilons(config, network)
        write_node_table(network, eps0, v0, os.path.join(out, "nodes.csv"))
        _write_mse(results, os.path.join(out, "mse.csv"))
        _write_concentration(results, os.path.join(out, "concentration.csv"))
        _write_summary(results, *stats, os.path.join(out, "summary.csv"))
    except OSError as exc:
        log.error("writing results failed: %s", exc)
        return 1
    log.info("wrote results for %d trial(s) to %s (K=%.6f)", config.n_trials, out, stats[-1])
    return 0


def _write_mse(results, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["variant", "t", "mse_avg_mean", "mse_max_mean", "stderr_avg", "stderr_max"])
        for variant, traces in results.items():
            s = aggregate(traces)
            for t in range(s.mse_avg_mean.size):
                w.writerow([variant.value, t] + [
                    _fmt(x[t]) for x in (s.mse_avg_mean, s.mse_max_mean, s.stderr_avg, s.stderr_max)
                ])


def _write_concentration(results, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["variant", "trial", "agent", "t", "log2_p_at_target"])
        for variant, traces in results.items():
            for trial, tr in enumerate(traces):
                lb = tr.log_belief_at_target
                for agent in range(tr.n_agents):
                    for t in range(lb.shape[0]):
                        w.writerow([variant.value, trial, agent, t, _fmt(lb[t, agent])])


def _write_summary(results, eps, v, caps, k_bound, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["variant", "agent", "epsilon", "v", "capacity", "slope_mean", "slope_stderr", "K"])
        for variant, traces in results.items():
            s = aggregate(traces)
            for i in range(eps.size):
                w.writerow([variant.value, i] + [
                    _fmt(x) for x in (eps[i], v[i], caps[i], s.slope_mean[i], s.slope_stderr[i], k_bound)
                ])


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="distpba",
        description="Monte Carlo runs of distributed probabilistic bisection over an agent network.",
    )
    p.add_argument("--config", help="key = value config file; flags override it")
    p.add_argument("--variant", choices=[v.value for v in AlgorithmVariant] + ["all"])
    p.add_argument("--seed", dest="master_seed", type=int, help="master seed (u64)")
    p.add_argument("--trials", "--n-trials", dest="n_trials", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--grid", "--grid-size", dest="grid_size", type=int)
    p.add_argument("--out", dest="output_dir")
    p.add_argument("--network-mode", choices=["fixed", "per-trial"])
    p.add_argument("--n-agents", type=int)
    p.add_argument("--radius", type=float)
    p.add_argument("--low-eps", type=float)
    p.add_argument("--high-eps", type=float)
    p.add_argument("--n-low", type=int)
    p.add_argument("--weight-rule", choices=["equal", "metropolis"])
    p.add_argument("--target", type=float, help="fix X* instead of drawing it per trial")
    p.add_argument("--no-refine", dest="refine", action="store_false", default=None,
                   help="keep the fixed uniform grid instead of inserting query points")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args) -> ExperimentConfig:
    values = asdict(ExperimentConfig())
    explicit = set()
    if args.config:
        from_file = load_config(args.config)
        values.update(from_file)
        explicit.update(from_file)
    for key in _PARSERS:
        val = getattr(args, key, None)
        if val is not None:
            values[key] = val
            explicit.add(key)
    if "n_low" not in explicit:
        # keep at least one high-error agent when only N is changed
        values["n_low"] = max(0, min(values["n_low"], values["n_agents"] - 1))
    return ExperimentConfig(**values)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = config_from_args(args)
    except (ConfigError, OSError) as exc:
        print(f"distpba: {exc}", file=sys.stderr)
        return 2
    errs = validate(config)
    if errs:
        for e in errs:
            print(f"distpba: invalid config: {e}", file=sys.stderr)
        return 2
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
