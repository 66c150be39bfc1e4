"""Monte Carlo estimates with batch-means errors and deterministic reduction."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

DEFAULT_BATCHES = 32  # >= 30 so batch-means standard errors are meaningful


@dataclass(frozen=True)
class MetricEstimate:
    """A Monte Carlo value with its batch-means standard error."""

    value: float
    std_error: float
    replicates: int
    method: str = "full_monte_carlo"

    def __post_init__(self):
        if self.std_error < 0:
            raise ValueError("std_error must be nonnegative")

    def scaled(self, factor: float) -> "MetricEstimate":
        return MetricEstimate(self.value * factor, self.std_error * abs(factor),
                              self.replicates, self.method)


def split_batches(replicates: int, n_batches: int = DEFAULT_BATCHES) -> tuple[int, int]:
    """Equal batch sizes; the realized replicate count is rounded up."""
    n_batches = max(1, n_batches)
    size = max(1, -(-replicates // n_batches))
    return n_batches, size


def run_batches(batch_fn: Callable[[int], np.ndarray], n_batches: int,
                threads: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate per-batch mean vectors and reduce them in batch order.

    batch_fn(b) must be a pure function of the batch index (it derives its own
    random stream), so the reduction is identical for any thread count.
    Returns (mean, std_error) arrays over whatever vector batch_fn produces.
    """
    if threads <= 1:
        results = [np.asarray(batch_fn(b), dtype=float) for b in range(n_batches)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda b: np.asarray(batch_fn(b), dtype=float),
                                    range(n_batches)))
    stacked = np.stack(results, axis=0)
    mean = stacked.mean(axis=0)
    if n_batches > 1:
        se = stacked.std(axis=0, ddof=1) / np.sqrt(n_batches)
    else:
        se = np.zeros_like(mean)
    return mean, se


def combined_se(*errors: float) -> float:
    return float(np.sqrt(sum(e * e for e in errors)))
