import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats
from scipy.spatial.distance import pdist

from d2dcache.geometry import (MATERN_II, ParentProcess, Window,
                               matern_ii_density, palm_field,
                               sample_matern_ii, sample_poisson_pp,
                               sample_translated_grid, uniform_disc)
from d2dcache.rng import substream


def test_poisson_zero_intensity_is_empty():
    pts = sample_poisson_pp(0.0, Window((0, 0), 100.0), substream(0, 0))
    assert len(pts) == 0


def test_poisson_mean_count():
    # lambda=0.012 on a disc of radius 100: mean 0.012*pi*1e4 = 376.99...
    rng = substream(1, 0)
    window = Window((0, 0), 100.0)
    expected = 0.012 * window.area
    counts = np.array([len(sample_poisson_pp(0.012, window, rng))
                       for _ in range(10_000)])
    se = counts.std(ddof=1) / math.sqrt(len(counts))
    assert abs(counts.mean() - expected) < 3 * se


def test_poisson_count_variance_equidispersion():
    rng = substream(2, 0)
    window = Window((0, 0), 1.0 / math.sqrt(math.pi))  # unit area
    counts = np.array([len(sample_poisson_pp(1.0, window, rng))
                       for _ in range(100_000)])
    assert counts.var(ddof=1) == pytest.approx(1.0, rel=0.05)


def test_poisson_positions_uniform():
    rng = substream(3, 0)
    window = Window((5.0, -2.0), 50.0)
    pts = np.concatenate([sample_poisson_pp(0.005, window, rng)
                          for _ in range(200)])
    r2 = np.sum((pts - [5.0, -2.0]) ** 2, axis=1) / 50.0 ** 2
    assert stats.kstest(r2, "uniform").pvalue > 0.01


def test_matern_density_closed_form():
    assert matern_ii_density(0.0, 100.0) == 0.0
    # saturation: lambda -> inf gives 1/(pi delta^2)
    assert matern_ii_density(1e3, 100.0) == pytest.approx(
        1.0 / (math.pi * 1e4), rel=1e-12)
    # direct arithmetic at lambda=2e-4, delta=100
    expected = (1.0 - math.exp(-2e-4 * math.pi * 1e4)) / (math.pi * 1e4)
    assert matern_ii_density(2e-4, 100.0) == pytest.approx(expected, rel=1e-12)
    assert matern_ii_density(2e-4, 100.0) == pytest.approx(3.17715460700406e-5,
                                                           rel=1e-9)


@given(st.floats(1e-7, 1e-2), st.floats(2e-7, 1e-2))
def test_matern_density_monotone_in_intensity(lam_a, lam_b):
    lo, hi = sorted((lam_a, lam_b))
    assert matern_ii_density(lo, 50.0) <= matern_ii_density(hi, 50.0) + 1e-18


def test_matern_hard_core_every_draw():
    proc = ParentProcess(MATERN_II, 3e-4, 100.0)
    rng = substream(4, 0)
    for _ in range(5):
        pts = sample_matern_ii(proc, Window((0, 0), 1500.0), rng)
        assert len(pts) > 10
        assert pdist(pts).min() >= proc.delta


def test_matern_density_empirical():
    # 3-standard-error agreement with the closed form over 200 draws
    proc = ParentProcess(MATERN_II, 1e-3, 100.0)
    window = Window((0, 0), 2000.0)
    rng = substream(5, 0)
    counts = np.array([len(sample_matern_ii(proc, window, rng))
                       for _ in range(200)])
    se = counts.std(ddof=1) / math.sqrt(len(counts))
    assert abs(counts.mean() - proc.density * window.area) < 3 * se


def test_matern_sparse_limit_retention_near_one():
    # lambda*pi*delta^2 -> 0: density approaches the proposal intensity
    lam, delta = 1e-6, 10.0
    assert matern_ii_density(lam, delta) == pytest.approx(lam, rel=2e-3)
    proc = ParentProcess(MATERN_II, lam, delta)
    rng = substream(6, 0)
    counts = np.array([len(sample_matern_ii(proc, Window((0, 0), 3000.0), rng))
                       for _ in range(300)])
    expected = lam * math.pi * 3000.0 ** 2
    se = counts.std(ddof=1) / math.sqrt(len(counts))
    assert abs(counts.mean() - expected) < 3 * se


def test_matern_edge_retention_unbiased():
    # proposal padding: retention near the boundary matches the center
    proc = ParentProcess(MATERN_II, 2.0 / (math.pi * 100.0 ** 2), 100.0)
    window = Window((0, 0), 800.0)
    rng = substream(7, 0)
    center = rim = 0
    for _ in range(200):
        pts = sample_matern_ii(proc, window, rng)
        radius = np.hypot(pts[:, 0], pts[:, 1])
        center += int(np.sum(radius <= 300.0))
        rim += int(np.sum(radius >= 700.0))
    area_center = math.pi * 300.0 ** 2
    area_rim = math.pi * (800.0 ** 2 - 700.0 ** 2)
    total = center + rim
    p = area_center / (area_center + area_rim)
    res = stats.chisquare([center, rim], f_exp=[total * p, total * (1 - p)])
    assert res.pvalue > 0.05


def test_grid_nearest_neighbor_exactly_delta():
    rng = substream(8, 0)
    pts = sample_translated_grid(50.0, Window((0, 0), 500.0), rng)
    d = pdist(pts)
    assert d.min() == pytest.approx(50.0, rel=1e-12)


def test_grid_expected_count():
    # pi*500^2 / 50^2 = 314.159... by translation invariance
    rng = substream(9, 0)
    counts = np.array([len(sample_translated_grid(50.0, Window((0, 0), 500.0), rng))
                       for _ in range(2000)])
    se = counts.std(ddof=1) / math.sqrt(len(counts))
    assert abs(counts.mean() - math.pi * 500.0 ** 2 / 2500.0) < 3 * se


def test_grid_density_large_window():
    rng = substream(10, 0)
    window = Window((0, 0), 2000.0)
    counts = np.array([len(sample_translated_grid(50.0, window, rng))
                       for _ in range(200)])
    assert counts.mean() / window.area == pytest.approx(50.0 ** -2, rel=0.01)


def test_grid_translation_invariance():
    # displacement from the window center to the nearest grid point is
    # uniform over a delta x delta cell
    rng = substream(11, 0)
    delta = 50.0
    disp = []
    for _ in range(2000):
        pts = sample_translated_grid(delta, Window((0, 0), 200.0), rng)
        disp.append(pts[np.argmin(np.sum(pts ** 2, axis=1))])
    disp = np.array(disp)
    for axis in range(2):
        res = stats.kstest(disp[:, axis], "uniform",
                           args=(-delta / 2.0, delta))
        assert res.pvalue > 0.01


def test_palm_field_grid_is_grid_through_origin():
    pts = palm_field(ParentProcess("translated_grid", delta=50.0), 500.0,
                     substream(12, 0))
    assert not np.any(np.all(pts == 0.0, axis=1))
    offsets = pts / 50.0
    assert np.allclose(offsets, np.rint(offsets))


def test_palm_field_matern_respects_clearance():
    proc = ParentProcess(MATERN_II, 3e-4, 100.0)
    pts = palm_field(proc, 2000.0, substream(13, 0))
    assert np.hypot(pts[:, 0], pts[:, 1]).min() >= proc.delta


def test_uniform_disc_radius():
    pts = uniform_disc(5000, 3.0, substream(14, 0))
    assert np.hypot(pts[:, 0], pts[:, 1]).max() <= 3.0


def test_window_and_process_validation():
    with pytest.raises(ValueError):
        Window((0, 0), 0.0)
    with pytest.raises(ValueError):
        ParentProcess(MATERN_II, 0.0, 10.0)
    with pytest.raises(ValueError):
        ParentProcess("hexagonal", 1.0, 10.0)
    with pytest.raises(ValueError):
        sample_poisson_pp(-1.0, Window((0, 0), 10.0), substream(15, 0))
