"""Cluster mark sampling and the power-of-two TDMA slot allocation.

A cluster's marks are its caching/requesting user counts, their positions
(uniform on the disc), cache contents, requested videos, and the induced
match count N_m. The block is split into W(N_m, eps) slots, W always a power
of two: rounding down drops matched requests at random, rounding up leaves
slots empty at random positions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import NetworkConfig
from .content import count_matched, find_matches, sample_video_ids
from .geometry import uniform_disc


@dataclass
class ClusterMarks:
    center: np.ndarray
    cacher_positions: np.ndarray   # (N_u, 2), relative to center
    requester_positions: np.ndarray  # (N_r, 2)
    caches: np.ndarray             # (N_u, M) video ids
    requests: np.ndarray           # (N_r,) video ids
    match_sets: list = field(repr=False, default_factory=list)

    @property
    def n_cachers(self) -> int:
        return len(self.cacher_positions)

    @property
    def n_requests(self) -> int:
        return len(self.requester_positions)

    @property
    def n_matched(self) -> int:
        return count_matched(self.match_sets)


@dataclass(frozen=True)
class SlotPlan:
    n_slots: int                      # W, a power of two
    assignments: tuple                # per slot: (tx index, rx index) or None
    dropped: frozenset                # request indices dropped

    @property
    def scheduled(self) -> tuple:
        return tuple(a for a in self.assignments if a is not None)


def sample_cluster(cfg: NetworkConfig, center, rng: np.random.Generator) -> ClusterMarks:
    """Draw a full mark vector for one cluster."""
    n_u = rng.poisson(cfg.mean_cachers)
    n_r = rng.poisson(cfg.mean_requests)
    cachers = uniform_disc(n_u, cfg.r_c, rng)
    requesters = uniform_disc(n_r, cfg.r_c, rng)
    cache_cum = np.cumsum(cfg.content.cache_pmf())
    request_cum = np.cumsum(cfg.content.request_pmf())
    caches = sample_video_ids(cache_cum, n_u * cfg.content.cache_size, rng)
    caches = caches.reshape(n_u, cfg.content.cache_size)
    requests = sample_video_ids(request_cum, n_r, rng)
    marks = ClusterMarks(np.asarray(center, dtype=float), cachers, requesters,
                         caches, requests)
    marks.match_sets = find_matches(requests, caches)
    return marks


def w_low(n_m: int) -> int:
    if n_m < 1:
        raise ValueError("n_m must be >= 1")
    return 1 << (int(n_m).bit_length() - 1)


def w_high(n_m: int) -> int:
    low = w_low(n_m)
    return low if low == n_m else low * 2


def slot_count(n_m: int, eps: float) -> int:
    """Number of TDMA slots W(N_m, eps).

    Rounds down to W_L when (N_m - W_L)/(W_H - W_L) < eps, strictly, else up
    to W_H. eps = 0 therefore never drops requests; eps = 1 always fills every
    slot. Exact powers of two map to themselves.
    """
    if n_m < 1:
        raise ValueError("slot count undefined for n_m < 1")
    low, high = w_low(n_m), w_high(n_m)
    if low == high:
        return low
    return low if (n_m - low) / (high - low) < eps else high


def slot_count_vec(n_m: np.ndarray, eps: float) -> np.ndarray:
    """Vectorized slot_count for n_m >= 1 integer arrays."""
    n_m = np.asarray(n_m, dtype=np.int64)
    if np.any(n_m < 1):
        raise ValueError("slot count undefined for n_m < 1")
    # frexp: n = frac * 2**e with frac in [0.5, 1), so floor(log2 n) = e - 1
    low = np.ldexp(1.0, np.frexp(n_m.astype(float))[1] - 1).astype(np.int64)
    high = np.where(low == n_m, low, 2 * low)
    ratio = np.where(high > low, (n_m - low) / np.maximum(high - low, 1), 0.0)
    return np.where((low == high) | (ratio < eps), low, high)


def scheduled_count_vec(n_m: np.ndarray, eps: float) -> np.ndarray:
    """Requests actually scheduled: N_m when rounding up, W_L when down."""
    w = slot_count_vec(n_m, eps)
    return np.minimum(np.asarray(n_m, dtype=np.int64), w)


def schedule(marks: ClusterMarks, eps: float, n_m_max: int,
             rng: np.random.Generator) -> SlotPlan:
    """Apply the slot-allocation strategy to a sampled cluster.

    Matched requests above n_m_max are dropped at random first. With W = W_H
    the survivors are permuted into a uniformly random subset of slots; with
    W = W_L, N_m - W_L survivors are dropped at random and the rest permuted
    into all slots. Each scheduled request is paired with one transmitter
    drawn uniformly from its candidate set.
    """
    matched = [i for i, s in enumerate(marks.match_sets) if len(s)]
    dropped: set[int] = set()
    if not matched:
        return SlotPlan(1, (None,), frozenset())
    if len(matched) > n_m_max:
        excess = rng.choice(len(matched), len(matched) - n_m_max, replace=False)
        dropped.update(matched[i] for i in excess)
        matched = [i for i in matched if i not in dropped]
    n_m = len(matched)
    w = slot_count(n_m, eps)
    if w < n_m:
        out = rng.choice(n_m, n_m - w, replace=False)
        dropped.update(matched[i] for i in out)
        matched = [i for i in matched if i not in dropped]
    slots: list = [None] * w
    order = rng.permutation(len(matched))
    positions = rng.choice(w, len(matched), replace=False)
    for slot_idx, req_pos in zip(positions, order):
        rx = matched[req_pos]
        candidates = marks.match_sets[rx]
        tx = int(candidates[rng.integers(len(candidates))])
        slots[slot_idx] = (tx, rx)
    return SlotPlan(w, tuple(slots), frozenset(dropped))


def sample_match_counts(cfg: NetworkConfig, n_clusters: int,
                        rng: np.random.Generator) -> np.ndarray:
    """Vectorized draw of N_m for many independent clusters.

    Positions are irrelevant to the match structure, so only counts, caches
    and requests are sampled. Membership is tested through per-cluster keyed
    ids, which keeps the whole batch in numpy.
    """
    lib = cfg.content.library_size
    n_u = rng.poisson(cfg.mean_cachers, n_clusters)
    n_r = rng.poisson(cfg.mean_requests, n_clusters)
    cache_cum = np.cumsum(cfg.content.cache_pmf())
    request_cum = np.cumsum(cfg.content.request_pmf())

    cache_draws = n_u * cfg.content.cache_size
    cache_ids = sample_video_ids(cache_cum, int(cache_draws.sum()), rng)
    cache_owner = np.repeat(np.arange(n_clusters, dtype=np.int64), cache_draws)
    cache_keys = np.unique(cache_owner * lib + cache_ids)

    request_ids = sample_video_ids(request_cum, int(n_r.sum()), rng)
    request_owner = np.repeat(np.arange(n_clusters, dtype=np.int64), n_r)
    matched = np.isin(request_owner * lib + request_ids, cache_keys,
                      assume_unique=False)
    return np.bincount(request_owner[matched], minlength=n_clusters)


def choose_n_m_max(cfg: NetworkConfig, rng: np.random.Generator,
                   replicates: int = 10_000, tail: float = 1e-3) -> int:
    """Smallest power of two whose exceedance probability is below `tail`.

    Estimated from an independent pre-pass over cluster draws; returns at
    least 1 even for almost-surely-empty clusters.
    """
    if cfg.n_m_max is not None:
        return cfg.n_m_max
    n_m = sample_match_counts(cfg, replicates, rng)
    cap = 1
    while np.mean(n_m > cap) >= tail:
        cap *= 2
    return cap
