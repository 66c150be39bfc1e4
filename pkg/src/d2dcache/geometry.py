"""Planar point-process samplers for cluster centers.

Three parent processes are supported: homogeneous Poisson, Matern type II
hard-core (dependent thinning with uniform marks), and the translated square
grid. All samplers draw on a disc window; the Matern proposal window is
dilated by the clearance so points near the edge see full competition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

MATERN_II = "matern_ii"
TRANSLATED_GRID = "translated_grid"


@dataclass(frozen=True)
class Window:
    """Disc simulation window (meters)."""

    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 1000.0

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("window radius must be positive")

    @property
    def area(self) -> float:
        return math.pi * self.radius ** 2


@dataclass(frozen=True)
class ParentProcess:
    """Parent hard-core process: Matern II proposal intensity or grid pitch."""

    kind: str = MATERN_II
    intensity: float = 2e-4   # Poisson proposal intensity (Matern II only)
    delta: float = 100.0      # hard-core clearance / grid pitch

    def __post_init__(self):
        if self.kind not in (MATERN_II, TRANSLATED_GRID):
            raise ValueError(f"unknown parent kind {self.kind!r}")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.kind == MATERN_II and self.intensity <= 0:
            raise ValueError("Matern proposal intensity must be positive")

    @property
    def density(self) -> float:
        """Stationary density of retained cluster centers."""
        if self.kind == TRANSLATED_GRID:
            return self.delta ** -2
        return matern_ii_density(self.intensity, self.delta)


def uniform_disc(n: int, radius: float, rng: np.random.Generator,
                 center: tuple[float, float] = (0.0, 0.0)) -> np.ndarray:
    """n i.i.d. uniform points on a disc, shape (n, 2)."""
    r = radius * np.sqrt(rng.random(n))
    theta = rng.random(n) * (2.0 * math.pi)
    pts = np.column_stack((r * np.cos(theta), r * np.sin(theta)))
    pts += np.asarray(center, dtype=float)
    return pts


def sample_poisson_pp(intensity: float, window: Window,
                      rng: np.random.Generator) -> np.ndarray:
    """Homogeneous Poisson point process on the window."""
    if intensity < 0:
        raise ValueError("intensity must be nonnegative")
    n = rng.poisson(intensity * window.area)
    return uniform_disc(n, window.radius, rng, window.center)


def matern_ii_density(intensity: float, delta: float) -> float:
    """Retained density (1 - exp(-lambda pi delta^2)) / (pi delta^2)."""
    if intensity < 0:
        raise ValueError("intensity must be nonnegative")
    if delta <= 0:
        raise ValueError("delta must be positive")
    a = math.pi * delta ** 2
    return -math.expm1(-intensity * a) / a


def sample_matern_ii(proc: ParentProcess, window: Window,
                     rng: np.random.Generator) -> np.ndarray:
    """Matern type II sample restricted to the window.

    Proposals are drawn on the window dilated by delta and carry independent
    uniform marks; a proposal survives iff no proposal within delta holds a
    smaller mark (ties broken by index, a measure-zero event). Survivors are
    clipped back to the window, which removes edge-retention bias.
    """
    if proc.kind != MATERN_II:
        raise ValueError("parent process is not Matern II")
    padded = Window(window.center, window.radius + proc.delta)
    pts = sample_poisson_pp(proc.intensity, padded, rng)
    marks = rng.random(len(pts))
    keep = np.ones(len(pts), dtype=bool)
    if len(pts) > 1:
        pairs = cKDTree(pts).query_pairs(proc.delta, output_type="ndarray")
        if len(pairs):
            i, j = pairs[:, 0], pairs[:, 1]
            i_wins = (marks[i] < marks[j]) | ((marks[i] == marks[j]) & (i < j))
            keep[np.where(i_wins, j, i)] = False
    pts = pts[keep]
    d2 = np.sum((pts - np.asarray(window.center)) ** 2, axis=1)
    return pts[d2 <= window.radius ** 2]


def sample_translated_grid(delta: float, window: Window,
                           rng: np.random.Generator) -> np.ndarray:
    """Square grid of pitch delta with a uniform random translation."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    u = rng.random(2) * delta
    cx, cy = window.center
    r = window.radius
    m = np.arange(math.floor((cx - r - u[0]) / delta),
                  math.floor((cx + r - u[0]) / delta) + 1)
    n = np.arange(math.floor((cy - r - u[1]) / delta),
                  math.floor((cy + r - u[1]) / delta) + 1)
    mm, nn = np.meshgrid(m, n, indexing="ij")
    pts = np.column_stack((mm.ravel() * delta + u[0], nn.ravel() * delta + u[1]))
    d2 = np.sum((pts - np.asarray(window.center)) ** 2, axis=1)
    return pts[d2 <= r ** 2]


def sample_parent(proc: ParentProcess, window: Window,
                  rng: np.random.Generator) -> np.ndarray:
    if proc.kind == MATERN_II:
        return sample_matern_ii(proc, window, rng)
    return sample_translated_grid(proc.delta, window, rng)


def palm_field(proc: ParentProcess, radius: float,
               rng: np.random.Generator) -> np.ndarray:
    """Interfering cluster centers seen from a typical cluster at the origin.

    For the grid the Palm field is the grid through the origin minus the
    origin itself. For Matern II we plant the origin cluster and remove any
    sampled center inside the clearance disc B(0, delta).
    """
    window = Window((0.0, 0.0), radius)
    if proc.kind == TRANSLATED_GRID:
        k = math.floor(radius / proc.delta)
        m = np.arange(-k, k + 1) * proc.delta
        mm, nn = np.meshgrid(m, m, indexing="ij")
        pts = np.column_stack((mm.ravel(), nn.ravel()))
        pts = pts[np.sum(pts ** 2, axis=1) <= radius ** 2]
        return pts[np.any(pts != 0.0, axis=1)]
    pts = sample_matern_ii(proc, window, rng)
    return pts[np.sum(pts ** 2, axis=1) >= proc.delta ** 2]
