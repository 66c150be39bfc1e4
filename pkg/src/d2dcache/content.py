"""Video popularity, caching, and request matching.

Video ids are 0-based (0 = most popular). Requests follow the Zipf law
p_V(v) ~ (v+1)^-gamma; caches hold M independent draws from p_A, duplicates
allowed, with p_A = p_V unless a separate cache exponent is configured.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def zipf_pmf(gamma: float, library_size: int) -> np.ndarray:
    """Zipf probability vector over a library of the given size."""
    if library_size < 1:
        raise ValueError("library_size must be >= 1")
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    ranks = np.arange(1, library_size + 1, dtype=float)
    weights = ranks ** -gamma
    return weights / weights.sum()


@dataclass(frozen=True)
class ContentConfig:
    library_size: int = 500
    cache_size: int = 6
    zipf_gamma: float = 0.6
    cache_gamma: float | None = None  # None: users cache what they watch

    def __post_init__(self):
        if self.library_size < 1 or self.cache_size < 1:
            raise ValueError("library_size and cache_size must be >= 1")

    def request_pmf(self) -> np.ndarray:
        return zipf_pmf(self.zipf_gamma, self.library_size)

    def cache_pmf(self) -> np.ndarray:
        gamma = self.zipf_gamma if self.cache_gamma is None else self.cache_gamma
        return zipf_pmf(gamma, self.library_size)


def match_probability(content: ContentConfig, lambda_u: float, r_c: float) -> float:
    """Probability that a typical request finds its video cached in-cluster.

    Exact expectation over the request law: caching users form a Poisson
    process of mean lambda_u*pi*r_c^2 on the cluster disc and each caches the
    requested video with probability 1 - (1 - p_A(v))^M.
    """
    if lambda_u < 0:
        raise ValueError("lambda_u must be nonnegative")
    if r_c <= 0:
        raise ValueError("r_c must be positive")
    mean_users = lambda_u * math.pi * r_c ** 2
    p_v = content.request_pmf()
    p_a = content.cache_pmf()
    with np.errstate(divide="ignore"):  # p_A = 1 is fine: covered = 1 exactly
        covered = -np.expm1(content.cache_size * np.log1p(-np.minimum(p_a, 1.0)))
    return float(np.sum(p_v * -np.expm1(-mean_users * covered)))


def find_matches(requests, caches) -> list[np.ndarray]:
    """Per-request candidate transmitter sets {j : V_i in A_j}.

    Deterministic and order-consistent: permuting the cache list permutes the
    returned indices accordingly.
    """
    cache_sets = [frozenset(int(v) for v in np.asarray(c).ravel()) for c in caches]
    out = []
    for v in np.asarray(requests, dtype=int).ravel():
        out.append(np.array([j for j, s in enumerate(cache_sets) if v in s],
                            dtype=int))
    return out


def count_matched(match_sets) -> int:
    return sum(1 for s in match_sets if len(s))


def sample_video_ids(pmf_cumsum: np.ndarray, n: int,
                     rng: np.random.Generator) -> np.ndarray:
    """n independent draws from the pmf given as an inclusive cumsum."""
    return np.searchsorted(pmf_cumsum, rng.random(n), side="right")
