"""Per-subcommand experiment computations, returning (header, rows).

Kept separate from argument parsing so tests and scripts can drive the same
code paths that produce the CSV outputs.
"""

from __future__ import annotations

import math

import numpy as np

from . import rng as streams
from .config import ExperimentConfig
from .geometry import MATERN_II, ParentProcess, Window, matern_ii_density, sample_matern_ii
from .interference import lt_interference_approx, monte_carlo_lt
from .mc import run_batches, split_batches
from .metrics import estimate_service_curves, prepare_slot_law
from .tradeoff import (SweepGrid, optimize_global, optimize_local,
                       optimize_local_global)
from .validate import run_all


def lt_compare_rows(exp: ExperimentConfig, threads: int = 1):
    """Monte Carlo versus closed-form LT over the eta grid (at each |d|)."""
    net = exp.network
    lt_cfg = exp.lt_compare
    etas = np.geomspace(lt_cfg.eta_min, lt_cfg.eta_max, lt_cfg.n_eta)
    law, _ = prepare_slot_law(net, exp.seed)
    lt_mc, lt_se = monte_carlo_lt(net, etas, lt_cfg.d_values, lt_cfg.n1,
                                  law=law, replicates=exp.replicates,
                                  seed=exp.seed, threads=threads)
    rows = []
    for p, d in enumerate(lt_cfg.d_values):
        for e, eta in enumerate(etas):
            approx = lt_interference_approx(
                float(eta), float(d), lt_cfg.n1,
                parent_density=net.parent_density, delta=net.parent.delta,
                law=law, alpha=net.channel.alpha, c_tilde=net.channel.c_tilde)
            rows.append((d, eta, lt_mc[p, e], lt_se[p, e], approx))
    return ["d", "eta", "lt_mc", "lt_mc_se", "lt_approx"], rows


def tl_sweep_rows(exp: ExperimentConfig, threads: int = 1):
    """Metric curves over the attempted-rate grid for a fixed geometry."""
    net = exp.network
    sweep = exp.rate_sweep
    rates = np.geomspace(sweep.rate_min, sweep.rate_max, sweep.n_rates)
    curves = estimate_service_curves(net, rates, replicates=exp.replicates,
                                     seed=exp.seed, threads=threads)
    rows = [(r, curves.tl[j], curves.tl_se[j], curves.tg[j], curves.tg_se[j],
             curves.rbar[j], curves.rbar_se[j])
            for j, r in enumerate(rates)]
    return ["rate", "tl", "tl_se", "tg", "tg_se", "rbar", "rbar_se"], rows


_FRONTIER_HEADER = ["objective", "objective_se", "feasible",
                    "r_c", "rate", "lam", "delta", "lambda_p"]


def _frontier_rows(points, constraint_names):
    rows = []
    for point in points:
        params = point.params or {}
        rows.append(tuple(point.constraints[name] for name in constraint_names)
                    + (point.objective.value, point.objective.std_error,
                       int(point.feasible),
                       params.get("r_c", math.nan), params.get("rate", math.nan),
                       params.get("lam", math.nan), params.get("delta", math.nan),
                       params.get("lambda_p", math.nan)))
    return rows


def tradeoff_global_rows(exp: ExperimentConfig, threads: int = 1):
    grid = SweepGrid.from_config(exp.tradeoff)
    points = optimize_global(grid, exp.network,
                             rate_floors=exp.tradeoff.rate_floors,
                             replicates=exp.replicates, seed=exp.seed,
                             threads=threads)
    return ["rate_floor"] + _FRONTIER_HEADER, _frontier_rows(points, ["rate_floor"])


def tradeoff_local_rows(exp: ExperimentConfig, threads: int = 1):
    grid = SweepGrid.from_config(exp.tradeoff)
    points = optimize_local(grid, exp.network,
                            rate_floors=exp.tradeoff.rate_floors,
                            density_floors=exp.tradeoff.density_floors,
                            replicates=exp.replicates, seed=exp.seed,
                            threads=threads)
    return (["density_floor", "rate_floor"] + _FRONTIER_HEADER,
            _frontier_rows(points, ["density_floor", "rate_floor"]))


def tradeoff_localglobal_rows(exp: ExperimentConfig, threads: int = 1):
    grid = SweepGrid.from_config(exp.tradeoff)
    rows = []
    cache: dict = {}
    for rate in exp.tradeoff.fixed_rates:
        points = optimize_local_global(grid, exp.network, rate,
                                       local_floors=exp.tradeoff.local_floors,
                                       replicates=exp.replicates, seed=exp.seed,
                                       threads=threads, cache=cache)
        rows.extend(_frontier_rows(points, ["rate", "local_floor"]))
    return ["rate", "local_floor"] + _FRONTIER_HEADER, rows


def density_check_rows(exp: ExperimentConfig, threads: int = 1):
    """Empirical versus closed-form Matern density at the configured point
    and at a few hard-core loads around it."""
    net = exp.network
    delta = net.parent.delta
    window = Window((0.0, 0.0), 30.0 * delta)
    rows = []
    base = net.parent.intensity if net.parent.kind == MATERN_II else 2e-4
    loads = sorted({0.5, 2.0, 10.0,
                    base * math.pi * delta ** 2})
    for k, load in enumerate(loads):
        lam = load / (math.pi * delta ** 2)
        proc = ParentProcess(MATERN_II, lam, delta)
        expected = matern_ii_density(lam, delta)
        n_batches, batch_size = split_batches(exp.replicates)

        def batch_fn(b, proc=proc, k=k):
            rng = streams.substream(exp.seed, streams.VALIDATE, 10, k, b)
            return np.array([np.mean([
                len(sample_matern_ii(proc, window, rng))
                for _ in range(batch_size)])])

        mean, se = run_batches(batch_fn, n_batches, threads)
        empirical = float(mean[0]) / window.area
        emp_se = float(se[0]) / window.area
        rows.append((lam, delta, empirical, emp_se, expected,
                     abs(empirical - expected) / expected))
    return (["lam", "delta", "empirical", "empirical_se", "formula", "rel_err"],
            rows)


def validate_rows(exp: ExperimentConfig, threads: int = 1):
    # replicates relative to the default (2000) scale the whole suite; the
    # stated tolerances assume the default scale
    results = run_all(exp.seed, threads, scale=exp.replicates / 2000.0)
    rows = [(r.name, "PASS" if r.passed else "FAIL", r.statistic, r.threshold,
             r.detail) for r in results]
    return ["property", "status", "statistic", "threshold", "detail"], rows
