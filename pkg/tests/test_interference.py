import math

import numpy as np
import pytest
from scipy import integrate, stats

from d2dcache.cluster import sample_match_counts, slot_count_vec
from d2dcache.config import NetworkConfig, preset
from d2dcache.content import ContentConfig
from d2dcache.geometry import MATERN_II, ParentProcess, palm_field
from d2dcache.interference import (PAIRED, RANDOM_B, SlotCountLaw,
                                   _random_b_factors, achievable_rate_bound,
                                   estimate_slot_count_law,
                                   exact_slot_rate_oracle, field_interference,
                                   hole_integral, lt_batch,
                                   lt_interference_approx, monte_carlo_lt,
                                   shared_table)
from d2dcache.metrics import prepare_slot_law
from d2dcache.rng import substream
from d2dcache.validate import check_lemma3, check_lemma4


def _net(**kw):
    defaults = dict(parent=ParentProcess(MATERN_II, 2e-4, 80.0), r_c=40.0,
                    lambda_u=0.012, lambda_r=0.003,
                    content=ContentConfig(100, 6, 0.6), epsilon=0.5)
    defaults.update(kw)
    return NetworkConfig(**defaults)


def test_slot_count_law_validation():
    with pytest.raises(ValueError):
        SlotCountLaw(np.array([1, 3]), np.array([0.5, 0.5]), 0.0)
    with pytest.raises(ValueError):
        SlotCountLaw(np.array([1, 2]), np.array([0.5, 0.4]), 0.0)
    law = SlotCountLaw(np.array([1, 2, 4]), np.array([0.2, 0.3, 0.1]), 0.4)
    sample = law.sample(5000, substream(40, 0))
    assert set(np.unique(sample)).issubset({0, 1, 2, 4})


def test_slot_law_point_mass_when_single_match_forced():
    # L=1, M=1 with at least one cacher: every request matches; tiny lambda_r
    # makes N_m effectively Bernoulli, so active clusters all get W = 1
    net = _net(content=ContentConfig(1, 1, 0.6),
               lambda_u=20.0 / (math.pi * 40.0 ** 2),
               lambda_r=0.05 / (math.pi * 40.0 ** 2))
    law = estimate_slot_count_law(net, 20_000, substream(41, 0), n_m_max=1)
    assert law.probs.sum() + law.p_silent == pytest.approx(1.0, abs=1e-12)
    assert law.w[0] == 1
    assert law.probs[0] == pytest.approx(1.0 - law.p_silent, abs=1e-12)
    assert 0.02 < law.probs[0] < 0.08


def test_fig4_slot_count_mode_is_eight():
    net = preset("fig4").network
    law = estimate_slot_count_law(net, 4000, substream(42, 0), n_m_max=32)
    assert law.w[np.argmax(law.probs)] == 8
    n_m = sample_match_counts(net, 4000, substream(43, 0))
    mode = np.bincount(n_m).argmax()
    assert 6 <= mode <= 10


def test_field_interference_empty():
    net = _net()
    out = field_interference(np.zeros((1, 2)), 4, np.zeros((0, 2)),
                             np.zeros(0, dtype=int), net, substream(44, 0))
    assert out.tolist() == [0.0]
    silent = field_interference(np.zeros((1, 2)), 4, np.array([[200.0, 0.0]]),
                                np.array([0]), net, substream(44, 1))
    assert silent.tolist() == [0.0]


def test_field_interference_single_full_power_cluster():
    # one interferer with W <= n1 contributes P * h * l(d); distance is pinned
    # by a tiny cluster radius, so I / (P l(d)) is unit exponential
    net = _net(r_c=1e-6)
    rng = substream(45, 0)
    centers = np.array([[300.0, 0.0]])
    w = np.array([2])
    draws = np.array([field_interference(np.zeros((1, 2)), 4, centers, w, net,
                                         rng)[0] for _ in range(4000)])
    scale = net.channel.power * net.channel.c_tilde * 300.0 ** -4
    assert stats.kstest(draws / scale, "expon").pvalue > 0.01


def test_random_b_composition_conserves_activity():
    rng = substream(46, 0)
    m = np.array([1, 4, 4, 8, 2])
    factors = _random_b_factors(m, rng)
    offsets = np.concatenate(([0], np.cumsum(m)))
    for k in range(len(m)):
        group = factors[offsets[k]:offsets[k + 1]]
        assert group.sum() == m[k]
        assert np.all(group >= 0)


def test_paired_modes_share_time_average():
    # sum_j B_j = 2^i/n1 means equal gains give identical totals; over many
    # draws the two modes also share the mean
    net = _net(r_c=1e-6)
    rng = substream(47, 0)
    centers = np.array([[250.0, 0.0], [400.0, 300.0]])
    w = np.array([16, 32])
    b1s, rands = [], []
    for _ in range(3000):
        b1, rand = field_interference(np.zeros((1, 2)), 2, centers, w, net,
                                      rng, mode=PAIRED)
        b1s.append(b1[0])
        rands.append(rand[0])
    b1s, rands = np.array(b1s), np.array(rands)
    diff = rands - b1s
    assert abs(diff.mean()) < 4 * diff.std(ddof=1) / math.sqrt(len(diff))


def test_achievable_rate_bound_values():
    assert achievable_rate_bound(1.0, 1.0, 1) == 1.0            # log2(2)
    assert achievable_rate_bound(3.0, 1.0, 4) == pytest.approx(0.5)
    assert achievable_rate_bound(1.0, 0.0, 8) == math.inf
    assert achievable_rate_bound(1.0, 1e12, 1) < 1e-11
    with pytest.raises(ValueError):
        achievable_rate_bound(0.0, 1.0, 1)


def test_exact_slot_rate_oracle_against_bound():
    g = 2.0
    # constant interference: exact equals the bound
    exact = exact_slot_rate_oracle(g, [0.7, 0.7], 4)
    bound = achievable_rate_bound(g, 0.7, 4)
    assert exact == pytest.approx(bound, rel=1e-12)
    # Jensen: spread phases beat the averaged-interference bound
    exact = exact_slot_rate_oracle(g, [0.5, 1.5], 4)
    bound = achievable_rate_bound(g, 1.0, 4)
    assert exact > bound
    assert exact_slot_rate_oracle(g, [0.0, 0.0], 2) == math.inf


def test_lemma3_dominance_randomized():
    result = check_lemma3(seed=3, instances=300)
    assert result.passed, result.detail


def test_lemma4_paired_dominance_small():
    result = check_lemma4(seed=3, threads=2, replicates=1500)
    assert result.passed, result.detail


def test_hole_integral_zero_and_validation():
    assert hole_integral(0.0, 0.3, 2) == 0.0
    with pytest.raises(ValueError):
        hole_integral(-1.0, 0.0, 1)
    with pytest.raises(ValueError):
        hole_integral(1.0, 1.5, 1)


@pytest.mark.parametrize("eta_t,zeta,c", [(0.5, 0.35, 1), (30.0, 0.1, 4)])
def test_hole_integral_against_scipy(eta_t, zeta, c):
    def integrand(r, th):
        d2 = r * r + zeta * zeta - 2.0 * r * zeta * math.cos(th)
        u = eta_t * d2 ** -2.0
        return r * -math.expm1(-c * math.log1p(u / c))

    ref, _ = integrate.dblquad(integrand, 0.0, 2.0 * math.pi, 1.0, 2000.0,
                               epsabs=1e-12, epsrel=1e-8)
    ref += 2.0 * math.pi * eta_t * 2000.0 ** -2.0 / 2.0
    assert hole_integral(eta_t, zeta, c) == pytest.approx(ref, rel=1e-5)


def _lt_kwargs(net, law):
    return dict(parent_density=net.parent_density, delta=net.parent.delta,
                law=law, alpha=net.channel.alpha,
                c_tilde=net.channel.c_tilde)


def test_lt_approx_trivial_points():
    net = _net()
    law = SlotCountLaw(np.array([4]), np.array([1.0]), 0.0)
    assert lt_interference_approx(0.0, 10.0, 4, **_lt_kwargs(net, law)) == 1.0
    assert lt_interference_approx(1e8, 10.0, 4, parent_density=0.0,
                                  delta=80.0, law=law) == 1.0


def test_lt_approx_monotonicity():
    net = _net()
    law = SlotCountLaw(np.array([2, 8]), np.array([0.4, 0.6]), 0.0)
    kw = _lt_kwargs(net, law)
    etas = np.geomspace(1e4, 1e10, 12)
    values = [lt_interference_approx(e, 20.0, 2, **kw) for e in etas]
    assert np.all(np.diff(values) < 1e-12)
    # farther from the center means closer to the interferers
    ds = np.linspace(0.0, net.r_c, 8)
    by_d = [lt_interference_approx(3e7, d, 2, **kw) for d in ds]
    assert np.all(np.diff(by_d) < 1e-9)
    denser = dict(kw, parent_density=2.0 * net.parent_density)
    assert (lt_interference_approx(3e7, 20.0, 2, **denser)
            < lt_interference_approx(3e7, 20.0, 2, **kw))


def test_lt_table_matches_quadrature():
    net = _net()
    law = SlotCountLaw(np.array([1, 4, 16]), np.array([0.3, 0.5, 0.15]), 0.05)
    kw = _lt_kwargs(net, law)
    rng = substream(48, 0)
    etas = 10.0 ** rng.uniform(3.0, 10.0, 40)
    ds = rng.uniform(0.0, net.r_c, 40)
    n1s = np.array([1, 2, 4, 8])[rng.integers(0, 4, 40)]
    table_vals = np.array([
        lt_batch(np.array([e]), np.array([d]), np.array([n]), **kw)[0]
        for e, d, n in zip(etas, ds, n1s)])
    exact_vals = np.array([
        lt_interference_approx(e, d, int(n), **kw)
        for e, d, n in zip(etas, ds, n1s)])
    assert np.abs(table_vals - exact_vals).max() < 2e-3


def test_truncation_tail_below_one_percent():
    # annulus (40..80 delta) contribution to E[I] versus the inner field
    net = _net()
    law, _ = prepare_slot_law(net, 7)
    rng = substream(49, 0)
    inner_sum = annulus_sum = 0.0
    point = np.array([[20.0, 0.0]])
    for _ in range(300):
        pts = palm_field(net.parent, 2.0 * net.rho_sim, rng)
        radius = np.hypot(pts[:, 0], pts[:, 1])
        w = law.sample(len(pts), rng)
        inner = radius <= net.rho_sim
        inner_sum += field_interference(point, 8, pts[inner], w[inner],
                                        net, rng)[0]
        annulus_sum += field_interference(point, 8, pts[~inner], w[~inner],
                                          net, rng)[0]
    assert annulus_sum < 0.01 * inner_sum


def test_monte_carlo_lt_thread_determinism():
    net = _net()
    law, _ = prepare_slot_law(net, 7)
    etas = np.geomspace(1e6, 1e9, 4)
    a = monte_carlo_lt(net, etas, [0.0, 20.0], 2, law=law, replicates=64,
                       seed=9, threads=1)
    b = monte_carlo_lt(net, etas, [0.0, 20.0], 2, law=law, replicates=64,
                       seed=9, threads=4)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
