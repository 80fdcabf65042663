"""Shared builders for the test suite."""
import numpy as np
import pytest

from mecmarket.model import CachingDecision, SystemParams, Task, UserProfile
from mecmarket.stage1 import SlotMarket
from mecmarket.stage2 import FrequencyDistribution, PopularityVector


def sample_user(rng: np.random.Generator) -> UserProfile:
    return UserProfile(
        transmit_power_w=rng.uniform(0.08, 0.2),
        distance_m=rng.uniform(100.0, 1000.0),
        fading=rng.exponential(1.0),
        cpu_freq_hz=rng.uniform(0.5e6, 4e6),
    )


def sample_task(rng: np.random.Generator) -> Task:
    return Task(data_bits=rng.uniform(200.0, 1000.0) * 8192,
                cycles_per_bit=rng.uniform(800.0, 2000.0))


def random_market(rng: np.random.Generator, num_users: int,
                  params: SystemParams | None = None,
                  all_cached: bool = True) -> SlotMarket:
    """A fully populated slot with Table-1-style draws."""
    params = params or SystemParams()
    n = params.num_programs
    users = tuple(sample_user(rng) for _ in range(num_users))
    tasks = tuple(sample_task(rng) for _ in range(num_users))
    programs = rng.integers(0, n, size=num_users)
    if all_cached:
        mask = np.ones(n, dtype=np.int8)
    else:
        mask = rng.integers(0, 2, size=n).astype(np.int8)
        mask[rng.integers(n)] = 1  # keep at least one program priced
    caching = CachingDecision(mask=mask, sizes=np.full(n, 25.0))
    raw = rng.uniform(0.1, 1.0, size=n)
    popularity = PopularityVector(raw / raw.sum())
    dist = FrequencyDistribution(0.5e6, 4e6)
    return SlotMarket(users, tasks, programs, caching, popularity, dist, params)


@pytest.fixture
def params() -> SystemParams:
    return SystemParams()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
