"""Inter-cluster interference: Monte Carlo field, rate bounds, and the LT.

The time-averaged interference seen during one slot of a cluster running n1
slots sums, over interfering clusters, one full-power transmitter when the
cluster has at most n1 slots, and 2^i/n1 transmitters weighted by n1/2^i when
it has 2^i > n1. The per-transmitter activity multipliers B sum to 2^i/n1;
the worst case (for Rayleigh success probability) sets every B to 1, and a
random exchangeable composition is kept as a test mode.

The closed-form Laplace transform approximation for Matern parents replaces
the hard-core Palm field by a Poisson field with a cleared disc of radius
delta and collapses interferers onto their cluster centers. Its radial
integral depends only on (eta * C / delta^alpha, |d| / delta, ceil(2^i/n1)),
which is what the cached lookup tables exploit.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from . import rng as streams
from .channel import (RAYLEIGH_POWER_LAW, WINNER_LOGNORMAL,
                      grid_penetration_count, winner_inter_received)
from .cluster import choose_n_m_max, sample_match_counts, slot_count_vec
from .config import NetworkConfig
from .geometry import TRANSLATED_GRID, palm_field, uniform_disc
from .mc import run_batches, split_batches

WORST_CASE_B1 = "worst_case_b1"
RANDOM_B = "random_b"
PAIRED = "paired"


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


@dataclass(frozen=True)
class SlotCountLaw:
    """Distribution of the per-cluster slot count W, with a silent atom.

    `probs[i]` is the probability that a cluster transmits with `w[i]` slots;
    `p_silent` is the probability of no matched request (zero interference).
    """

    w: np.ndarray
    probs: np.ndarray
    p_silent: float

    def __post_init__(self):
        total = float(np.sum(self.probs)) + self.p_silent
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"slot-count law sums to {total}, not 1")
        if np.any(self.w < 1) or np.any(self.w & (self.w - 1)):
            raise ValueError("slot counts must be powers of two")

    @property
    def delta_max(self) -> int:
        return int(self.w[-1])

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Per-cluster slot counts; 0 marks a silent cluster."""
        values = np.concatenate(([0], self.w))
        p = np.concatenate(([self.p_silent], self.probs))
        return values[rng.choice(len(values), size=n, p=p / p.sum())]


def law_from_match_counts(n_m: np.ndarray, cap: int, eps: float) -> SlotCountLaw:
    """Slot-count law implied by a sample of match counts and a cap."""
    n_m = np.minimum(np.asarray(n_m, dtype=np.int64), cap)
    active = n_m >= 1
    w_values = 2 ** np.arange(int(math.log2(cap)) + 1, dtype=np.int64)
    counts = np.zeros(len(w_values))
    if np.any(active):
        w = slot_count_vec(n_m[active], eps)
        idx = np.searchsorted(w_values, w)
        np.add.at(counts, idx, 1.0)
    return SlotCountLaw(w_values, counts / len(n_m), float(np.mean(~active)))


def estimate_slot_count_law(cfg: NetworkConfig, replicates: int,
                            rng: np.random.Generator,
                            n_m_max: int | None = None) -> SlotCountLaw:
    """Empirical law of W(min(N_m, n_m_max), eps) over independent clusters."""
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    cap = n_m_max if n_m_max is not None else choose_n_m_max(cfg, rng)
    n_m = sample_match_counts(cfg, replicates, rng)
    return law_from_match_counts(n_m, cap, cfg.epsilon)


# ---------------------------------------------------------------------------
# Monte Carlo field

def field_interference(points: np.ndarray, n1: int, centers: np.ndarray,
                       w_x: np.ndarray, cfg: NetworkConfig,
                       rng: np.random.Generator, mode: str = WORST_CASE_B1,
                       observer_center=(0.0, 0.0)):
    """Slot-averaged interference power at each observation point.

    `centers`/`w_x` describe the interfering clusters (w = 0 silent); the
    caller is responsible for excluding the observer's own cluster and any
    center inside the clearance. Fading and positions are drawn fresh, with
    independent fading toward every observation point.

    Returns an array of shape (len(points),); in PAIRED mode a tuple of the
    worst-case (all B = 1) and random-composition values computed from the
    same gain draws, for paired dominance tests.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n_pts = len(points)
    active = np.asarray(w_x) > 0
    if not np.any(active):
        zero = np.zeros(n_pts)
        return (zero, zero.copy()) if mode == PAIRED else zero
    centers_a = np.asarray(centers, dtype=float)[active]
    w_a = np.asarray(w_x)[active].astype(np.int64)
    n1 = int(n1)
    m = np.where(w_a <= n1, 1, w_a // n1)
    weight = np.where(w_a <= n1, 1.0, n1 / w_a)
    owner = np.repeat(np.arange(len(centers_a)), m)
    tx_pos = centers_a[owner] + uniform_disc(len(owner), cfg.r_c, rng)

    diff = tx_pos[:, None, :] - points[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    channel = cfg.channel
    if channel.kind == RAYLEIGH_POWER_LAW:
        fading = rng.exponential(1.0, dist.shape)
        contrib = channel.power * channel.c_tilde * fading * dist ** -channel.alpha
    else:
        chi = rng.standard_normal(dist.shape)
        if cfg.parent.kind == TRANSLATED_GRID:
            n_b = grid_penetration_count(
                centers_a[owner] - np.asarray(observer_center, dtype=float),
                cfg.parent.delta)[:, None]
        else:
            n_b = 1.0
        contrib = winner_inter_received(dist, n_b, chi, channel)
    contrib *= weight[owner][:, None]

    total_b1 = contrib.sum(axis=0)
    if mode == WORST_CASE_B1:
        return total_b1
    factors = _random_b_factors(m, rng)
    total_rand = (contrib * factors[:, None]).sum(axis=0)
    if mode == RANDOM_B:
        return total_rand
    if mode == PAIRED:
        return total_b1, total_rand
    raise ValueError(f"unknown interference mode {mode!r}")


def _random_b_factors(m: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Exchangeable activity counts B per transmitter, sum over a cluster = m."""
    factors = np.ones(int(m.sum()))
    offsets = np.concatenate(([0], np.cumsum(m)))
    for group in np.unique(m):
        if group < 2:
            continue
        rows = np.where(m == group)[0]
        counts = rng.multinomial(group, np.full(group, 1.0 / group),
                                 size=len(rows))
        for row, c in zip(rows, counts):
            factors[offsets[row]:offsets[row + 1]] = c
    return factors


# ---------------------------------------------------------------------------
# Rates

def achievable_rate_bound(g: float, i_total: float, n1: int,
                          power: float = 1.0) -> float:
    """Time-sharing lower bound (1/n1) log2(1 + P g / I).

    Zero total interference returns +inf: with no noise the success event
    holds at any finite attempted rate.
    """
    if g <= 0:
        raise ValueError("source gain must be positive")
    if n1 < 1:
        raise ValueError("n1 must be >= 1")
    if i_total < 0:
        raise ValueError("interference must be nonnegative")
    if i_total == 0:
        return math.inf
    return math.log2(1.0 + power * g / i_total) / n1


def exact_slot_rate_oracle(g: float, phases, n1: int,
                           power: float = 1.0) -> float:
    """Exact time-shared rate over the sub-slot interference phases.

    The block has Delta = n1 * len(phases) slots in the busiest cluster; the
    observer's slot sees len(phases) interference values, each for an equal
    fraction of the slot. Order does not matter. Small-scale test oracle for
    achievable_rate_bound.
    """
    phases = np.asarray(phases, dtype=float)
    if phases.ndim != 1 or len(phases) == 0:
        raise ValueError("phases must be a nonempty vector")
    if np.any(phases < 0):
        raise ValueError("interference phases must be nonnegative")
    if g <= 0:
        raise ValueError("source gain must be positive")
    delta = n1 * len(phases)
    if np.any(phases == 0):
        return math.inf
    return float(np.sum(np.log2(1.0 + power * g / phases)) / delta)


# ---------------------------------------------------------------------------
# Laplace transform approximation (Matern parents, Rayleigh power law)

_TAIL_KNEE = 1e3  # outer radius satisfies eta_t * R^-alpha <= 1/_TAIL_KNEE


def hole_integral(eta_t: float, zeta: float, c: int, alpha: float = 4.0,
                  tol: float = 1e-6, max_refine: int = 8) -> float:
    """G_c = integral over |u| > 1 of 1 - (1 + eta_t |u - zeta e1|^-alpha / c)^-c.

    Dimensionless form of the LT exponent integral (lengths in units of the
    clearance). Polar quadrature about the hole center: trapezoid in angle,
    log-radius Gauss-Legendre panels out to an adaptive radius, then a
    second-order analytic power-law tail. Node counts double until the value
    changes by less than `tol` relative.
    """
    if eta_t < 0:
        raise ValueError("eta_t must be nonnegative")
    if not 0.0 <= zeta < 1.0:
        raise ValueError("observation point must lie inside the clearance")
    if eta_t == 0.0:
        return 0.0
    c = int(c)
    r_out = max(40.0, (eta_t * _TAIL_KNEE) ** (1.0 / alpha))
    # analytic tail of integrand ~ u - (c+1)/(2c) u^2, u = eta_t r^-alpha
    tail = (2.0 * math.pi * eta_t * r_out ** (2.0 - alpha) / (alpha - 2.0)
            - (c + 1.0) / (2.0 * c) * 2.0 * math.pi * eta_t ** 2
            * r_out ** (2.0 - 2.0 * alpha) / (2.0 * alpha - 2.0))

    n_ang, n_panel = 64, 16
    previous = None
    for _ in range(max_refine):
        value = _polar_quadrature(eta_t, zeta, c, alpha, r_out, n_ang, n_panel)
        if previous is not None and abs(value - previous) <= tol * max(abs(value), 1e-300):
            return value + tail
        previous = value
        n_ang *= 2
        n_panel *= 2
    raise QuadratureError(
        f"hole integral did not converge (eta_t={eta_t:g}, zeta={zeta:g}, c={c})")


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def _polar_quadrature(eta_t, zeta, c, alpha, r_out, n_ang, n_panel) -> float:
    theta = (np.arange(n_ang) + 0.5) * (2.0 * math.pi / n_ang)
    cos_t = np.cos(theta)
    # substitute r = e^t: integral of r * f(r) dr = integral e^{2t} f(e^t) dt
    edges = np.linspace(0.0, math.log(r_out), n_panel + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    t_nodes = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    t_weights = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    r = np.exp(t_nodes)
    dist2 = r[:, None] ** 2 + zeta ** 2 - 2.0 * zeta * r[:, None] * cos_t[None, :]
    u = eta_t * dist2 ** (-0.5 * alpha)
    integrand = -np.expm1(-c * np.log1p(u / c))
    ang_mean = integrand.mean(axis=1)
    return float(2.0 * math.pi * np.sum(t_weights * r ** 2 * ang_mean))


def lt_interference_approx(eta: float, d_abs: float, n1: int, *,
                           parent_density: float, delta: float,
                           law: SlotCountLaw, alpha: float = 4.0,
                           c_tilde: float = 1.0, tol: float = 1e-6) -> float:
    """Closed-form LT of the approximate interference at |d| from the center.

    exp(-lambda_p * sum_i P(W = 2^i) * J_i) with J_i the cleared-plane
    integral for c_i = ceil(2^i / n1) grouped fading factors. Valid for the
    Rayleigh power-law channel only; silent clusters contribute nothing.
    """
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    if eta == 0.0 or parent_density == 0.0:
        return 1.0
    eta_t = c_tilde * eta / delta ** alpha
    zeta = d_abs / delta
    exponent = 0.0
    for w, p in zip(law.w, law.probs):
        if p == 0.0:
            continue
        c = -(-int(w) // int(n1))  # ceil
        exponent += p * hole_integral(eta_t, zeta, c, alpha, tol)
    return math.exp(-parent_density * delta ** 2 * exponent)


class HoleIntegralTable:
    """Interpolation tables for hole_integral, one grid per fading group c.

    G is linear in eta_t at the small end and grows like eta_t^(2/alpha) at
    the large end, so log G is interpolated bilinearly on (log10 eta_t, zeta)
    and extended by those exact asymptotic slopes outside the grid.
    """

    LOG_ETA = np.arange(-10.0, 14.0 + 1e-9, 0.25)
    ZETA = np.arange(0.0, 0.5501, 0.05)

    def __init__(self, alpha: float = 4.0, tol: float = 1e-7):
        self.alpha = alpha
        self.tol = tol
        self._tables: dict[int, np.ndarray] = {}
        self._lock = threading.Lock()

    def _table(self, c: int) -> np.ndarray:
        table = self._tables.get(c)
        if table is None:
            with self._lock:
                table = self._tables.get(c)
                if table is None:
                    table = np.log([[hole_integral(10.0 ** le, z, c, self.alpha,
                                                   self.tol)
                                     for z in self.ZETA] for le in self.LOG_ETA])
                    self._tables[c] = table
        return table

    def evaluate(self, eta_t, zeta, c: int) -> np.ndarray:
        """Vectorized G_c(eta_t, zeta); exact 0 at eta_t = 0."""
        eta_t = np.asarray(eta_t, dtype=float)
        zeta = np.broadcast_to(np.asarray(zeta, dtype=float), eta_t.shape)
        table = self._table(int(c))
        out = np.zeros(eta_t.shape)
        pos = eta_t > 0.0
        if not np.any(pos):
            return out
        log_eta = np.log10(eta_t[pos])
        lo, hi = self.LOG_ETA[0], self.LOG_ETA[-1]
        # asymptotic continuation outside the tabulated eta range
        slope_low = math.log(10.0)                      # G ~ eta_t
        slope_high = math.log(10.0) * 2.0 / self.alpha  # G ~ eta_t^(2/alpha)
        shift = np.where(log_eta < lo, (log_eta - lo) * slope_low, 0.0)
        shift += np.where(log_eta > hi, (log_eta - hi) * slope_high, 0.0)
        le = np.clip(log_eta, lo, hi)
        ze = np.clip(zeta[pos], self.ZETA[0], self.ZETA[-1])

        step_e = self.LOG_ETA[1] - self.LOG_ETA[0]
        step_z = self.ZETA[1] - self.ZETA[0]
        ie = np.clip(((le - lo) / step_e).astype(int), 0, len(self.LOG_ETA) - 2)
        iz = np.clip(((ze - self.ZETA[0]) / step_z).astype(int), 0, len(self.ZETA) - 2)
        fe = (le - self.LOG_ETA[ie]) / step_e
        fz = (ze - self.ZETA[iz]) / step_z
        log_g = ((1 - fe) * (1 - fz) * table[ie, iz]
                 + fe * (1 - fz) * table[ie + 1, iz]
                 + (1 - fe) * fz * table[ie, iz + 1]
                 + fe * fz * table[ie + 1, iz + 1])
        out[pos] = np.exp(log_g + shift)
        return out


def monte_carlo_lt(cfg: NetworkConfig, etas, d_values, n1: int, *,
                   law: SlotCountLaw, replicates: int, seed: int = 0,
                   threads: int = 1, paired: bool = False):
    """Empirical LT of the sampled field, E[exp(-eta I(d, n1))].

    Shares one field draw per replicate across all eta values and observation
    distances. With `paired=True` the worst-case (B = 1) and random-B fields
    are built from the same gain draws and the per-replicate difference
    rand - b1 is tracked, giving a tight paired dominance test.

    Returns (lt, se) arrays of shape (len(d_values), len(etas)); when paired,
    (lt_b1, se_b1, lt_rand, se_rand, diff, diff_se).
    """
    etas = np.asarray(etas, dtype=float)
    points = np.column_stack((np.asarray(d_values, dtype=float),
                              np.zeros(len(d_values))))
    n_batches, batch_size = split_batches(replicates)
    shape = (len(points), len(etas))
    blocks = 3 if paired else 1

    def batch_fn(b):
        rng = streams.substream(seed, streams.FIELD, b)
        acc = np.zeros((blocks,) + shape)
        for _ in range(batch_size):
            centers = palm_field(cfg.parent, cfg.rho_sim, rng)
            w_x = law.sample(len(centers), rng)
            if paired:
                i_b1, i_rand = field_interference(points, n1, centers, w_x,
                                                  cfg, rng, mode=PAIRED)
                e_b1 = np.exp(-np.outer(i_b1, etas))
                e_rand = np.exp(-np.outer(i_rand, etas))
                acc[0] += e_b1
                acc[1] += e_rand
                acc[2] += e_rand - e_b1
            else:
                i_b1 = field_interference(points, n1, centers, w_x, cfg, rng)
                acc[0] += np.exp(-np.outer(i_b1, etas))
        return (acc / batch_size).ravel()

    mean, se = run_batches(batch_fn, n_batches, threads)
    mean = mean.reshape((blocks,) + shape)
    se = se.reshape((blocks,) + shape)
    if paired:
        return mean[0], se[0], mean[1], se[1], mean[2], se[2]
    return mean[0], se[0]


_SHARED_TABLES: dict[float, HoleIntegralTable] = {}
_SHARED_LOCK = threading.Lock()


def shared_table(alpha: float = 4.0) -> HoleIntegralTable:
    key = round(float(alpha), 9)
    table = _SHARED_TABLES.get(key)
    if table is None:
        with _SHARED_LOCK:
            table = _SHARED_TABLES.setdefault(key, HoleIntegralTable(key))
    return table


def lt_batch(eta: np.ndarray, d_abs: np.ndarray, n1: np.ndarray, *,
             parent_density: float, delta: float, law: SlotCountLaw,
             alpha: float = 4.0, c_tilde: float = 1.0,
             table: HoleIntegralTable | None = None) -> np.ndarray:
    """Table-backed LT over per-cluster (eta, |d|, n1) arrays.

    Same quantity as lt_interference_approx, a few orders of magnitude faster
    for the metric sweeps; agreement is pinned by tests.
    """
    eta = np.asarray(eta, dtype=float)
    if parent_density == 0.0:
        return np.ones(eta.shape)
    table = table if table is not None else shared_table(alpha)
    eta_t = c_tilde * eta / delta ** alpha
    zeta = np.broadcast_to(np.asarray(d_abs, dtype=float) / delta, eta.shape)
    n1 = np.broadcast_to(np.asarray(n1, dtype=np.int64), eta.shape)
    exponent = np.zeros(eta.shape)
    for n1_val in np.unique(n1):
        rows = n1 == n1_val
        for w, p in zip(law.w, law.probs):
            if p == 0.0:
                continue
            c = -(-int(w) // int(n1_val))
            exponent[rows] += p * table.evaluate(eta_t[rows], zeta[rows], c)
    return np.exp(-parent_density * delta ** 2 * exponent)
