"""Counter-derived random streams for reproducible parallel Monte Carlo.

Every estimator draws from substreams keyed by (seed, subsystem tag, batch
index). Results are therefore bitwise reproducible for a given seed no matter
how many worker threads execute the batches.
"""

from __future__ import annotations

import numpy as np

# Subsystem tags; keep distinct so estimators never share a stream.
MARKS = 1
FIELD = 2
PAIRS = 3
LAW = 4
NMAX = 5
VALIDATE = 6
BRUTE = 7
CAMPBELL = 8


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent Philox generator for the given (seed, key...) address."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))
    return np.random.Generator(np.random.Philox(ss))
