"""Follower side: offload probability, demand estimate, threshold response."""
import numpy as np
import pytest

from mecmarket.model import (CachingDecision, PriceVector, SystemParams, Task,
                             UserProfile, user_cost)
from mecmarket.stage2 import (FrequencyDistribution, PopularityVector,
                              baseline_profile, delta_threshold,
                              estimate_offloaders, offload_probability,
                              optimal_alpha)

from conftest import random_market, sample_task, sample_user


def test_offload_probability_endpoints():
    dist = FrequencyDistribution(0.5e6, 4e6)
    theta = 2e7
    # free service: everyone offloads
    assert offload_probability(0.0, dist, theta) == 1.0
    # price so low that theta/price exceeds every frequency
    assert offload_probability(theta / 4e6 * 0.5, dist, theta) == 1.0
    # price so high that theta/price is below every frequency
    assert offload_probability(theta / 0.5e6 * 2.0, dist, theta) == 0.0
    with pytest.raises(ValueError):
        offload_probability(-1.0, dist, theta)


def test_offload_probability_uniform_midpoint():
    dist = FrequencyDistribution(1e6, 3e6)
    theta = 2e7
    price = theta / 2e6  # threshold frequency sits mid-range
    assert offload_probability(price, dist, theta) == pytest.approx(0.5, rel=1e-12)


def test_estimate_offloaders_frozen_value():
    # zero prices make every cached-program term G = 1; with 3 of 4 programs
    # cached at popularity 0.25 each: 1 + 39 * 0.75
    params = SystemParams()
    caching = CachingDecision(np.array([1, 1, 1, 0], dtype=np.int8),
                              np.full(4, 25.0))
    pop = PopularityVector.uniform(4)
    dist = FrequencyDistribution(0.5e6, 4e6)
    m_hat = estimate_offloaders(PriceVector(np.zeros(4)), caching, pop, 40,
                                dist, params)
    assert m_hat == 30.25


def test_estimate_offloaders_bounds():
    rng = np.random.default_rng(7)
    params = SystemParams()
    dist = FrequencyDistribution(0.5e6, 4e6)
    for _ in range(300):
        m = int(rng.integers(1, 200))
        mask = rng.integers(0, 2, size=4).astype(np.int8)
        caching = CachingDecision(mask, np.full(4, 25.0))
        raw = rng.uniform(0.0, 1.0, size=4) + 1e-9
        pop = PopularityVector(raw / raw.sum())
        prices = PriceVector(rng.uniform(0.0, 60.0, size=4))
        m_hat = estimate_offloaders(prices, caching, pop, m, dist, params)
        assert 1.0 <= m_hat <= m
    with pytest.raises(ValueError):
        estimate_offloaders(PriceVector(np.zeros(4)), caching, pop, 0, dist,
                            params)


def test_delta_threshold_frozen_value():
    # loc = 500 s, remote = 10 + 40 = 50 s at m_hat = 2: 500 / 550
    params = SystemParams(edge_freq_hz=5e7)
    u = UserProfile(0.1, 1e5, 10.0, 2e6)
    task = Task(data_bits=1e7, cycles_per_bit=100.0)
    d = delta_threshold(u, task, 2.0, params)
    assert d == pytest.approx(500.0 / 550.0, rel=1e-15)
    assert d == 0.9090909090909091


def test_delta_threshold_in_unit_interval():
    rng = np.random.default_rng(8)
    params = SystemParams()
    for _ in range(300):
        u, task = sample_user(rng), sample_task(rng)
        m_hat = 1.0 + rng.uniform(0.0, 99.0)
        d = delta_threshold(u, task, m_hat, params)
        assert 0.0 < d < 1.0


def test_optimal_alpha_threshold_behavior():
    rng = np.random.default_rng(9)
    params = SystemParams()
    for _ in range(100):
        u, task = sample_user(rng), sample_task(rng)
        m_hat = 1.0 + rng.uniform(0.0, 49.0)
        char = params.delay_cost_theta / u.cpu_freq_hz
        d = delta_threshold(u, task, m_hat, params)
        assert optimal_alpha(char * 0.999, u, task, m_hat, True, params) == d
        assert optimal_alpha(char, u, task, m_hat, True, params) == d  # tie offloads
        assert optimal_alpha(char * 1.001, u, task, m_hat, True, params) == 0.0
        assert optimal_alpha(char * 0.5, u, task, m_hat, False, params) == 0.0


def test_optimal_alpha_minimizes_user_cost_on_grid():
    # the returned proportion must be within grid resolution of the best
    rng = np.random.default_rng(10)
    params = SystemParams()
    grid = np.linspace(0.0, 1.0, 1001)
    for _ in range(50):
        u, task = sample_user(rng), sample_task(rng)
        m_hat = 1.0 + rng.uniform(0.0, 29.0)
        price = rng.uniform(0.0, 2.0) * params.delay_cost_theta / u.cpu_freq_hz
        a_star = optimal_alpha(price, u, task, m_hat, True, params)
        costs = np.array([user_cost(a, price, u, task, m_hat, True, params)
                          for a in grid])
        star_cost = user_cost(a_star, price, u, task, m_hat, True, params)
        assert star_cost <= costs.min() * (1 + 1e-9)


def test_baseline_profiles():
    rng = np.random.default_rng(11)
    market = random_market(rng, 20, all_cached=False)
    users = list(market.users)
    cached = market.caching.mask[market.programs].astype(bool)

    lc = baseline_profile("lc", users, market.programs, market.caching)
    assert np.array_equal(lc, np.zeros(20))

    co = baseline_profile("co", users, market.programs, market.caching)
    assert np.array_equal(co, np.where(cached, 1.0, 0.0))

    ro = baseline_profile("ro", users, market.programs, market.caching,
                          rng=np.random.default_rng(0))
    assert ((ro >= 0) & (ro <= 1)).all()
    assert (ro[~cached] == 0).all()
    ro2 = baseline_profile("ro", users, market.programs, market.caching,
                           rng=np.random.default_rng(0))
    assert np.array_equal(ro, ro2)

    with pytest.raises(ValueError):
        baseline_profile("nope", users, market.programs, market.caching)


def test_popularity_vector_validation():
    PopularityVector(np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        PopularityVector(np.array([0.5, 0.4]))
    with pytest.raises(ValueError):
        PopularityVector(np.array([-0.1, 1.1]))
    u = PopularityVector.uniform(4)
    assert u.values.sum() == pytest.approx(1.0, abs=1e-12)


def test_frequency_distribution_cdf():
    dist = FrequencyDistribution(1.0, 3.0)
    assert dist.cdf(0.5) == 0.0
    assert dist.cdf(2.0) == 0.5
    assert dist.cdf(10.0) == 1.0
    assert dist.cdf(np.inf) == 1.0
    with pytest.raises(ValueError):
        FrequencyDistribution(3.0, 1.0)
