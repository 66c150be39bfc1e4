"""Constrained grid searches tracing inner bounds of the trade-off regions.

The objectives are Monte Carlo estimates, so feasibility is judged with a
safety margin: a constraint `x >= floor` is accepted only when
`estimate - margin * std_error >= floor`. Grid cells are evaluated once and
memoized; all constraint values of a sweep reuse the same evaluations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .config import NetworkConfig, TradeoffGridConfig
from .geometry import MATERN_II
from .mc import MetricEstimate
from .metrics import ServiceCurves, estimate_service_curves, prepare_slot_law

FEASIBILITY_MARGIN = 3.0


@dataclass(frozen=True)
class SweepGrid:
    rc_values: tuple[float, ...]
    rate_values: tuple[float, ...]
    lam_values: tuple[float, ...]
    delta_factors: tuple[float, ...]   # delta = 2 * r_c * factor

    def __post_init__(self):
        for name in ("rc_values", "rate_values", "lam_values", "delta_factors"):
            if not getattr(self, name):
                raise ValueError(f"{name} must be nonempty")
        if min(self.delta_factors) < 1.0:
            raise ValueError("delta factors below 1 violate delta >= 2*r_c")

    @classmethod
    def from_config(cls, grid: TradeoffGridConfig,
                    rate_values: tuple[float, ...] | None = None) -> "SweepGrid":
        geom = np.geomspace
        lin = np.linspace
        return cls(
            rc_values=tuple(lin(grid.rc_min, grid.rc_max, grid.n_rc)),
            rate_values=rate_values if rate_values is not None else
            tuple(geom(grid.rate_min, grid.rate_max, grid.n_rates)),
            lam_values=tuple(geom(grid.lam_min, grid.lam_max, grid.n_lam)),
            delta_factors=tuple(lin(grid.factor_min, grid.factor_max,
                                    grid.n_factors)),
        )


@dataclass(frozen=True)
class CellMetrics:
    r_c: float
    lam: float
    delta: float
    lambda_p: float
    curves: ServiceCurves


@dataclass(frozen=True)
class TradeoffPoint:
    constraints: dict
    feasible: bool
    objective: MetricEstimate
    params: dict | None


def _cell_config(cfg: NetworkConfig, r_c: float, lam: float,
                 factor: float) -> NetworkConfig:
    delta = 2.0 * r_c * factor
    if cfg.parent.kind == MATERN_II:
        parent = replace(cfg.parent, intensity=lam, delta=delta)
    else:
        parent = replace(cfg.parent, delta=delta)
    return replace(cfg, parent=parent, r_c=r_c)


def evaluate_grid(cfg: NetworkConfig, grid: SweepGrid, *,
                  replicates: int = 2000, seed: int = 0, threads: int = 1,
                  cache: dict | None = None) -> list[CellMetrics]:
    """Metric curves for every (r_c, lambda, delta) cell over the rate axis."""
    cache = cache if cache is not None else {}
    laws = {}
    for idx, r_c in enumerate(grid.rc_values):
        base = replace(cfg, r_c=r_c,
                       parent=replace(cfg.parent, delta=2.0 * r_c))
        laws[r_c] = prepare_slot_law(base, seed, stream=(idx,))

    cells = [(i, r_c, lam, factor)
             for i, (r_c, lam, factor) in enumerate(
                 (r, l, f) for r in grid.rc_values
                 for l in grid.lam_values for f in grid.delta_factors)]

    def evaluate(entry):
        i, r_c, lam, factor = entry
        cell_cfg = _cell_config(cfg, r_c, lam, factor)
        key = (cell_cfg.parent, r_c, grid.rate_values, replicates, seed)
        if key not in cache:
            law, cap = laws[r_c]
            curves = estimate_service_curves(
                cell_cfg, grid.rate_values, replicates=replicates, seed=seed,
                threads=1, law=law, n_m_max=cap, stream=(i,))
            cache[key] = CellMetrics(r_c, lam, cell_cfg.parent.delta,
                                     cell_cfg.parent_density, curves)
        return cache[key]

    if threads <= 1:
        return [evaluate(entry) for entry in cells]
    from concurrent.futures import ThreadPoolExecutor
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(evaluate, cells))


def _infeasible(constraints: dict) -> TradeoffPoint:
    return TradeoffPoint(constraints, False, MetricEstimate(0.0, 0.0, 0), None)


def _params(cell: CellMetrics, rate: float) -> dict:
    return {"r_c": cell.r_c, "rate": rate, "lam": cell.lam,
            "delta": cell.delta, "lambda_p": cell.lambda_p}


def _search(cells, constraints, objective, admissible,
            margin=FEASIBILITY_MARGIN) -> TradeoffPoint:
    best = None
    for cell in cells:
        curves = cell.curves
        for j, rate in enumerate(curves.rates):
            if not admissible(cell, curves, j, margin):
                continue
            value = objective(cell, curves, j)
            if best is None or value > best[0]:
                best = (value, cell, j)
    if best is None:
        return _infeasible(constraints)
    value, cell, j = best
    kind = "tg" if objective is _tg_objective else "tl"
    est = (cell.curves.tg_estimate(j) if kind == "tg"
           else cell.curves.tl_estimate(j))
    return TradeoffPoint(constraints, True, est,
                         _params(cell, float(cell.curves.rates[j])))


def _tg_objective(cell, curves, j):
    return curves.tg[j]


def _tl_objective(cell, curves, j):
    return curves.tl[j]


def optimize_global(grid: SweepGrid, cfg: NetworkConfig, *,
                    rate_floors, replicates: int = 2000, seed: int = 0,
                    threads: int = 1, cache: dict | None = None,
                    margin: float = FEASIBILITY_MARGIN) -> list[TradeoffPoint]:
    """max T_G subject to Rbar >= r, for each rate floor r."""
    cells = evaluate_grid(cfg, grid, replicates=replicates, seed=seed,
                          threads=threads, cache=cache)
    points = []
    for r in rate_floors:
        def ok(cell, curves, j, m, r=r):
            return curves.rbar[j] - m * curves.rbar_se[j] >= r
        points.append(_search(cells, {"rate_floor": float(r)},
                              _tg_objective, ok, margin))
    return points


def optimize_local(grid: SweepGrid, cfg: NetworkConfig, *,
                   rate_floors, density_floors, replicates: int = 2000,
                   seed: int = 0, threads: int = 1,
                   cache: dict | None = None,
                   margin: float = FEASIBILITY_MARGIN) -> list[TradeoffPoint]:
    """max T_L subject to Rbar >= r and lambda_p >= lambda_t."""
    cells = evaluate_grid(cfg, grid, replicates=replicates, seed=seed,
                          threads=threads, cache=cache)
    points = []
    for lam_t in density_floors:
        for r in rate_floors:
            def ok(cell, curves, j, m, r=r, lam_t=lam_t):
                return (cell.lambda_p >= lam_t
                        and curves.rbar[j] - m * curves.rbar_se[j] >= r)
            points.append(_search(
                cells, {"rate_floor": float(r), "density_floor": float(lam_t)},
                _tl_objective, ok, margin))
    return points


def optimize_local_global(grid: SweepGrid, cfg: NetworkConfig, rate: float, *,
                          local_floors, replicates: int = 2000, seed: int = 0,
                          threads: int = 1, cache: dict | None = None,
                          margin: float = FEASIBILITY_MARGIN) -> list[TradeoffPoint]:
    """max T_G subject to T_L >= t_c at a fixed attempted rate."""
    fixed = SweepGrid(grid.rc_values, (float(rate),), grid.lam_values,
                      grid.delta_factors)
    cells = evaluate_grid(cfg, fixed, replicates=replicates, seed=seed,
                          threads=threads, cache=cache)
    points = []
    for t_c in local_floors:
        def ok(cell, curves, j, m, t_c=t_c):
            return curves.tl[j] - m * curves.tl_se[j] >= t_c
        points.append(_search(cells, {"local_floor": float(t_c),
                                      "rate": float(rate)},
                              _tg_objective, ok, margin))
    return points
