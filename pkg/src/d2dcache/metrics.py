"""Served-request metrics: local and global fractions and the average rate.

The estimators average, over typical-cluster mark draws, the scheduled count
times the conditional success probability of one exchangeable source to
destination pair:

    T_L  = E[(N_m 1{W=W_H} + W_L 1{W=W_L}) Fbar] / (lambda_r pi R_c^2)
    T_G  = lambda_p pi R_c^2 T_L
    Rbar = R E[1{N_m >= 1} Fbar]

with Fbar the ccdf of the source-destination gain at the slot-SIR threshold
I(D, W) (2^{W R} - 1). For the Rayleigh power-law channel Fbar reduces to the
interference Laplace transform; otherwise (and for cross-checks) the event is
simulated against a sampled field. Origin marks and the exterior field are
drawn independently, per the independent-marking of the model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import rng as streams
from .channel import (RAYLEIGH_POWER_LAW, intra_cluster_gain_winner)
from .cluster import (sample_cluster, sample_match_counts, schedule,
                      slot_count_vec)
from .config import NetworkConfig
from .content import match_probability
from .geometry import Window, palm_field, sample_parent, uniform_disc
from .interference import (SlotCountLaw, field_interference,
                           law_from_match_counts, lt_batch, shared_table)
from .mc import MetricEstimate, combined_se, run_batches, split_batches

LT_RAYLEIGH = "lt_rayleigh"
FULL_MONTE_CARLO = "full_monte_carlo"
CLOSED_FORM = "closed_form"

_MIN_PAIR_DISTANCE = 1e-9  # S = D is a measure-zero draw; keep path loss finite


def default_method(cfg: NetworkConfig) -> str:
    return LT_RAYLEIGH if cfg.channel.kind == RAYLEIGH_POWER_LAW else FULL_MONTE_CARLO


def prepare_slot_law(cfg: NetworkConfig, seed: int, *, replicates: int = 10_000,
                     stream: tuple[int, ...] = ()) -> tuple[SlotCountLaw, int]:
    """Slot-count law and match cap shared by the estimators for one config.

    One pre-pass of cluster draws serves both the cap rule (smallest power of
    two with exceedance below 1e-3) and the empirical W law.
    """
    rng = streams.substream(seed, streams.LAW, *stream)
    n_m = sample_match_counts(cfg, replicates, rng)
    if cfg.n_m_max is not None:
        cap = cfg.n_m_max
    else:
        cap = 1
        while np.mean(n_m > cap) >= 1e-3:
            cap *= 2
    return law_from_match_counts(n_m, cap, cfg.epsilon), cap


@dataclass(frozen=True)
class ServiceCurves:
    """Metric estimates over a grid of attempted rates (shared replicates)."""

    rates: np.ndarray
    tl: np.ndarray
    tl_se: np.ndarray
    tg: np.ndarray
    tg_se: np.ndarray
    rbar: np.ndarray
    rbar_se: np.ndarray
    replicates: int
    method: str

    def tl_estimate(self, j: int = 0) -> MetricEstimate:
        return MetricEstimate(float(self.tl[j]), float(self.tl_se[j]),
                              self.replicates, self.method)

    def tg_estimate(self, j: int = 0) -> MetricEstimate:
        return MetricEstimate(float(self.tg[j]), float(self.tg_se[j]),
                              self.replicates, self.method)

    def rbar_estimate(self, j: int = 0) -> MetricEstimate:
        return MetricEstimate(float(self.rbar[j]), float(self.rbar_se[j]),
                              self.replicates, self.method)


def estimate_service_curves(cfg: NetworkConfig, rates, *, replicates: int = 2000,
                            seed: int = 0, threads: int = 1,
                            method: str | None = None,
                            law: SlotCountLaw | None = None,
                            n_m_max: int | None = None,
                            stream: tuple[int, ...] = ()) -> ServiceCurves:
    rates = np.atleast_1d(np.asarray(rates, dtype=float))
    if np.any(rates < 0):
        raise ValueError("attempted rates must be nonnegative")
    method = method or default_method(cfg)
    if method == LT_RAYLEIGH and cfg.channel.kind != RAYLEIGH_POWER_LAW:
        raise ValueError("the LT reduction only applies to Rayleigh fading")
    if law is None or n_m_max is None:
        law, n_m_max = prepare_slot_law(cfg, seed)
    n_batches, batch_size = split_batches(replicates)

    if method == LT_RAYLEIGH:
        table = shared_table(cfg.channel.alpha)

        def batch_fn(b):
            rng = streams.substream(seed, streams.MARKS, *stream, b)
            return _lt_terms(cfg, rates, batch_size, rng, law, n_m_max, table)
    elif method == FULL_MONTE_CARLO:
        def batch_fn(b):
            rng = streams.substream(seed, streams.MARKS, *stream, b)
            return _mc_terms(cfg, rates, batch_size, rng, law, n_m_max)
    else:
        raise ValueError(f"unknown method {method!r}")

    mean, se = run_batches(batch_fn, n_batches, threads)
    tl_num, rbar_fac = mean[0], mean[1]
    tl_num_se, rbar_fac_se = se[0], se[1]
    denom = cfg.mean_requests
    coverage = cfg.coverage
    return ServiceCurves(
        rates=rates,
        tl=tl_num / denom, tl_se=tl_num_se / denom,
        tg=coverage * tl_num / denom, tg_se=coverage * tl_num_se / denom,
        rbar=rates * rbar_fac, rbar_se=rates * rbar_fac_se,
        replicates=n_batches * batch_size, method=method)


def _draw_origin_marks(cfg, batch_size, rng, cap):
    n_m = np.minimum(sample_match_counts(cfg, batch_size, rng), cap)
    active = n_m >= 1
    w = np.ones(batch_size, dtype=np.int64)
    if np.any(active):
        w[active] = slot_count_vec(n_m[active], cfg.epsilon)
    sched = np.where(active, np.minimum(n_m, w), 0)
    src = uniform_disc(batch_size, cfg.r_c, rng)
    dst = uniform_disc(batch_size, cfg.r_c, rng)
    pair = np.maximum(np.hypot(*(src - dst).T), _MIN_PAIR_DISTANCE)
    return active, w, sched, pair, dst


def _lt_terms(cfg, rates, batch_size, rng, law, cap, table):
    active, w, sched, pair, dst = _draw_origin_marks(cfg, batch_size, rng, cap)
    chan = cfg.channel
    wr = np.minimum(w[:, None] * rates[None, :], 1000.0)
    threshold = np.exp2(wr) - 1.0
    eta = threshold * (pair ** chan.alpha / (chan.power * chan.c_tilde))[:, None]
    fbar = lt_batch(eta, np.hypot(*dst.T)[:, None], w[:, None],
                    parent_density=cfg.parent_density, delta=cfg.parent.delta,
                    law=law, alpha=chan.alpha, c_tilde=chan.c_tilde, table=table)
    if cfg.noise_floor > 0.0:
        fbar = fbar * np.exp(-eta * cfg.noise_floor)
    fbar *= active[:, None]
    return np.stack(((sched[:, None] * fbar).mean(axis=0), fbar.mean(axis=0)))


def _mc_terms(cfg, rates, batch_size, rng, law, cap):
    active, w, sched, pair, dst = _draw_origin_marks(cfg, batch_size, rng, cap)
    chan = cfg.channel
    fbar = np.zeros((batch_size, len(rates)))
    for i in range(batch_size):
        if not active[i]:
            continue
        centers = palm_field(cfg.parent, cfg.rho_sim, rng)
        w_x = law.sample(len(centers), rng)
        total = field_interference(dst[i], int(w[i]), centers, w_x, cfg, rng)[0]
        total += cfg.noise_floor
        threshold = np.exp2(np.minimum(w[i] * rates, 1000.0)) - 1.0
        if chan.kind == RAYLEIGH_POWER_LAW:
            # conditional ccdf given the sampled field (Rayleigh closed form)
            scale = pair[i] ** chan.alpha / (chan.power * chan.c_tilde)
            fbar[i] = np.exp(-total * threshold * scale)
        else:
            received = intra_cluster_gain_winner(np.array([pair[i]]), chan, rng)[0]
            fbar[i] = (received > threshold * total).astype(float)
    return np.stack(((sched[:, None] * fbar).mean(axis=0), fbar.mean(axis=0)))


# ---------------------------------------------------------------------------
# Spec-level entry points

def local_metric(cfg: NetworkConfig, rate: float, *, replicates: int = 2000,
                 seed: int = 0, threads: int = 1, method: str | None = None,
                 law: SlotCountLaw | None = None,
                 n_m_max: int | None = None) -> MetricEstimate:
    curves = estimate_service_curves(cfg, [rate], replicates=replicates,
                                     seed=seed, threads=threads, method=method,
                                     law=law, n_m_max=n_m_max)
    return curves.tl_estimate(0)


def global_metric(cfg: NetworkConfig, rate: float, **kwargs) -> MetricEstimate:
    return local_metric(cfg, rate, **kwargs).scaled(cfg.coverage)


def average_rate(cfg: NetworkConfig, rate: float, *, replicates: int = 2000,
                 seed: int = 0, threads: int = 1, method: str | None = None,
                 law: SlotCountLaw | None = None,
                 n_m_max: int | None = None) -> MetricEstimate:
    curves = estimate_service_curves(cfg, [rate], replicates=replicates,
                                     seed=seed, threads=threads, method=method,
                                     law=law, n_m_max=n_m_max)
    return curves.rbar_estimate(0)


def metric_bounds(cfg: NetworkConfig) -> tuple[float, float]:
    """Closed-form ceilings (p_M, lambda_p pi R_c^2 p_M) for T_L and T_G."""
    p_match = match_probability(cfg.content, cfg.lambda_u, cfg.r_c)
    return p_match, cfg.coverage * p_match


# ---------------------------------------------------------------------------
# Event-level simulation (oracle paths)

def _count_served(cfg, marks, plan, rate, centers, w_x, rng,
                  observer_center=(0.0, 0.0), in_region=None) -> int:
    """Serve/fail decision for every scheduled pair of one cluster."""
    pairs = plan.scheduled
    if not pairs:
        return 0
    chan = cfg.channel
    center = np.asarray(observer_center, dtype=float)
    rx_pos = center + marks.requester_positions[[rx for _, rx in pairs]]
    keep = np.ones(len(pairs), dtype=bool) if in_region is None else in_region(rx_pos)
    total = field_interference(rx_pos, plan.n_slots, centers, w_x, cfg, rng,
                               observer_center=center) + cfg.noise_floor
    dist = np.maximum(np.hypot(
        *(marks.cacher_positions[[tx for tx, _ in pairs]]
          - marks.requester_positions[[rx for _, rx in pairs]]).T),
        _MIN_PAIR_DISTANCE)
    if chan.kind == RAYLEIGH_POWER_LAW:
        received = (chan.power * chan.c_tilde * rng.exponential(1.0, len(pairs))
                    * dist ** -chan.alpha)
    else:
        received = intra_cluster_gain_winner(dist, chan, rng)
    threshold = 2.0 ** min(plan.n_slots * rate, 1000.0) - 1.0
    success = received > threshold * total
    return int(np.sum(success & keep))


def brute_force_local_metric(cfg: NetworkConfig, rate: float, *,
                             replicates: int = 2000, seed: int = 0,
                             threads: int = 1,
                             law: SlotCountLaw | None = None,
                             n_m_max: int | None = None) -> MetricEstimate:
    """Direct event-level T_L: sample the typical cluster, schedule it, and
    test every scheduled transmission against a sampled field.

    Independent oracle for the formula-path estimator: it uses the actual
    matched pair positions and transmitter draws rather than the exchangeable
    single-pair reduction.
    """
    if law is None or n_m_max is None:
        law, n_m_max = prepare_slot_law(cfg, seed)
    n_batches, batch_size = split_batches(replicates)

    def batch_fn(b):
        rng = streams.substream(seed, streams.BRUTE, b)
        served = 0
        for _ in range(batch_size):
            marks = sample_cluster(cfg, (0.0, 0.0), rng)
            plan = schedule(marks, cfg.epsilon, n_m_max, rng)
            if not plan.scheduled:
                continue
            centers = palm_field(cfg.parent, cfg.rho_sim, rng)
            w_x = law.sample(len(centers), rng)
            served += _count_served(cfg, marks, plan, rate, centers, w_x, rng)
        return np.array([served / batch_size])

    mean, se = run_batches(batch_fn, n_batches, threads)
    denom = cfg.mean_requests
    return MetricEstimate(float(mean[0]) / denom, float(se[0]) / denom,
                          n_batches * batch_size, "event_simulation")


@dataclass(frozen=True)
class CampbellCheck:
    lhs: float
    lhs_se: float
    rhs: float
    rhs_se: float

    @property
    def rel_discrepancy(self) -> float:
        if self.rhs == 0.0:
            return 0.0 if self.lhs == 0.0 else math.inf
        return abs(self.lhs - self.rhs) / self.rhs

    @property
    def sigma_distance(self) -> float:
        se = combined_se(self.lhs_se, self.rhs_se)
        if se == 0.0:
            return 0.0 if self.lhs == self.rhs else math.inf
        return abs(self.lhs - self.rhs) / se


def campbell_identity_check(cfg: NetworkConfig, rate: float, *,
                            k_radius: float | None = None,
                            replicates: int = 400, seed: int = 0,
                            threads: int = 1) -> CampbellCheck:
    """Stationary count of served requests in a disc K versus
    lambda_p |K| times the typical-cluster mean.

    The left side simulates the whole network: every cluster whose users can
    reach K is fully marked and scheduled; other clusters interfere with slot
    counts drawn from the shared law. The right side reuses the event-level
    typical-cluster estimator.
    """
    k_radius = 2.0 * cfg.parent.delta if k_radius is None else k_radius
    law, cap = prepare_slot_law(cfg, seed)
    n_batches, batch_size = split_batches(replicates)
    observer_radius = k_radius + cfg.r_c

    def in_k(points):
        return np.hypot(points[:, 0], points[:, 1]) <= k_radius

    def batch_fn(b):
        rng = streams.substream(seed, streams.CAMPBELL, b)
        window = Window((0.0, 0.0), observer_radius + cfg.rho_sim)
        total = 0
        for _ in range(batch_size):
            parents = sample_parent(cfg.parent, window, rng)
            if not len(parents):
                continue
            radius = np.hypot(parents[:, 0], parents[:, 1])
            observer_idx = np.where(radius <= observer_radius)[0]
            w_all = law.sample(len(parents), rng)
            marks_plans = {}
            for o in observer_idx:
                marks = sample_cluster(cfg, parents[o], rng)
                plan = schedule(marks, cfg.epsilon, cap, rng)
                marks_plans[o] = (marks, plan)
                w_all[o] = plan.n_slots if plan.scheduled else 0
            for o in observer_idx:
                marks, plan = marks_plans[o]
                if not plan.scheduled:
                    continue
                near = np.hypot(parents[:, 0] - parents[o, 0],
                                parents[:, 1] - parents[o, 1]) <= cfg.rho_sim
                near[o] = False
                total += _count_served(cfg, marks, plan, rate,
                                       parents[near], w_all[near], rng,
                                       observer_center=parents[o],
                                       in_region=in_k)
        return np.array([total / batch_size])

    mean, se = run_batches(batch_fn, n_batches, threads)
    typical = brute_force_local_metric(cfg, rate, replicates=replicates,
                                       seed=seed, threads=threads,
                                       law=law, n_m_max=cap)
    factor = cfg.parent_density * math.pi * k_radius ** 2 * cfg.mean_requests
    return CampbellCheck(float(mean[0]), float(se[0]),
                         factor * typical.value, factor * typical.std_error)


def with_rate_zero_limit(cfg: NetworkConfig) -> NetworkConfig:
    """Config variant with drop-free scheduling (eps = 0 limit)."""
    return replace(cfg, epsilon=0.0)
