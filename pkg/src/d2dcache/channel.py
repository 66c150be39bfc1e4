"""Attenuation models.

Two channel families:

* ``rayleigh_power_law``: unit-mean exponential fading times C*d^-alpha path
  loss, used for both intra- and inter-cluster links (so |g|^2 = |h|^2 l(d)).
* ``winner_lognormal``: indoor Winner II A1 law inside a cluster (LOS drawn
  from the A1 LOS probability, wall count from the distance rule) and a
  B4-variant law between clusters (never LOS, 28 dB per cluster crossed).
  Both carry zero-mean lognormal shadowing in dB.

All functions return linear received power for a transmission at the model's
transmit power; SIRs are ratios of these values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

RAYLEIGH_POWER_LAW = "rayleigh_power_law"
WINNER_LOGNORMAL = "winner_lognormal"

# Winner II A1 dB-law constants: C1*log10(d) + C2 + C3*log10(fc/5) + 5*Nw + chi
WINNER_LOS = (18.7, 46.8, 20.0, 3.0)     # C1, C2, C3, shadowing sigma
WINNER_NLOS = (36.8, 43.8, 23.0, 6.0)
# B4 variant between clusters: 40*log10(d) + 41 + 22.7*log10(fc/5) + 28*Nb + chi
B4_CONSTANTS = (40.0, 41.0, 22.7, 28.0, 7.0)


@dataclass(frozen=True)
class ChannelConfig:
    kind: str = RAYLEIGH_POWER_LAW
    alpha: float = 4.0          # path-loss exponent (power law)
    c_tilde: float = 1.0        # path-loss constant (power law)
    tx_power: float = 1.0       # linear transmit power (power law)
    fc_ghz: float = 2.45        # carrier frequency (Winner)
    gain_tx_db: float = 12.0    # antenna gains and power budget (Winner)
    gain_rx_db: float = 0.0
    ptx_dbm: float = 20.0

    def __post_init__(self):
        if self.kind not in (RAYLEIGH_POWER_LAW, WINNER_LOGNORMAL):
            raise ValueError(f"unknown channel kind {self.kind!r}")
        if self.alpha <= 2:
            raise ValueError("alpha must exceed 2 for integrable interference")
        if self.tx_power <= 0 or self.c_tilde <= 0:
            raise ValueError("tx_power and c_tilde must be positive")

    @property
    def power(self) -> float:
        """Effective linear transmit power including antenna gains."""
        if self.kind == WINNER_LOGNORMAL:
            return 10.0 ** ((self.gain_tx_db + self.gain_rx_db + self.ptx_dbm) / 10.0)
        return self.tx_power


def path_loss(d, channel: ChannelConfig):
    """Power-law path loss C*d^-alpha; rejects co-located transceivers."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("path loss undefined at zero distance")
    return channel.c_tilde * d ** -channel.alpha


def sample_rayleigh_power(rng: np.random.Generator, size=None):
    """Unit-mean exponential power fading |h|^2."""
    return rng.exponential(1.0, size)


def los_probability(d):
    """Winner II A1 LOS probability, 1 below 5 m and clamped to [0, 1]."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    t = 1.24 - 0.61 * np.log10(d)
    inner = np.clip(1.0 - t ** 3, 0.0, None)
    p = 1.0 - 0.9 * np.cbrt(inner)
    return np.where(d <= 5.0, 1.0, np.clip(p, 0.0, 1.0))


def wall_count(d):
    """Distance-driven wall count for NLOS indoor links: 1 + floor((d/5-1)+)."""
    d = np.asarray(d, dtype=float)
    return 1.0 + np.floor(np.clip(d / 5.0 - 1.0, 0.0, None))


def intra_cluster_gain_winner(d, channel: ChannelConfig,
                              rng: np.random.Generator):
    """Linear received power from x to y inside a cluster (Winner II A1).

    Draws the LOS state from los_probability(d) and shadowing with the
    matching sigma; NLOS adds 5 dB per wall.
    """
    d = np.asarray(d, dtype=float)
    los = rng.random(d.shape) < los_probability(d)
    chi = rng.standard_normal(d.shape)
    return winner_intra_received(d, los, chi, channel)


def winner_intra_received(d, los, chi_std, channel: ChannelConfig):
    """Deterministic A1 law given LOS flags and standard-normal shadowing."""
    d = np.asarray(d, dtype=float)
    los = np.asarray(los, dtype=bool)
    c1 = np.where(los, WINNER_LOS[0], WINNER_NLOS[0])
    c2 = np.where(los, WINNER_LOS[1], WINNER_NLOS[1])
    c3 = np.where(los, WINNER_LOS[2], WINNER_NLOS[2])
    sigma = np.where(los, WINNER_LOS[3], WINNER_NLOS[3])
    walls = np.where(los, 0.0, wall_count(d))
    loss_db = (c1 * np.log10(d) + c2 + c3 * math.log10(channel.fc_ghz / 5.0)
               + 5.0 * walls + sigma * np.asarray(chi_std, dtype=float))
    return channel.power * 10.0 ** (-loss_db / 10.0)


def inter_cluster_gain_winner(d, n_b, channel: ChannelConfig,
                              rng: np.random.Generator):
    """Linear received power between clusters (B4 variant, never LOS)."""
    chi = rng.standard_normal(np.asarray(d, dtype=float).shape)
    return winner_inter_received(d, n_b, chi, channel)


def winner_inter_received(d, n_b, chi_std, channel: ChannelConfig):
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    n_b = np.asarray(n_b, dtype=float)
    if np.any(n_b < 1):
        raise ValueError("n_b counts penetrated clusters and is >= 1")
    a1, a2, a3, per_cluster, sigma = B4_CONSTANTS
    loss_db = (a1 * np.log10(d) + a2 + a3 * math.log10(channel.fc_ghz / 5.0)
               + per_cluster * n_b + sigma * np.asarray(chi_std, dtype=float))
    return channel.power * 10.0 ** (-loss_db / 10.0)


def grid_penetration_count(center_deltas: np.ndarray, delta: float) -> np.ndarray:
    """Clusters crossed between two grid cells: max(1, round(||dx||_inf/pitch))."""
    d_inf = np.max(np.abs(np.asarray(center_deltas, dtype=float)), axis=-1)
    return np.maximum(1.0, np.rint(d_inf / delta))
