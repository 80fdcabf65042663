"""Follower (user) side of the per-slot game.

Users observe prices and the caching mask, estimate how many peers will
offload, and best-respond with an offloading proportion. The best response
is a step function of the price: a user whose program is cached offloads the
threshold proportion ``delta`` iff the price does not exceed its
characteristic parameter ``theta / f`` (ties offload), and keeps the task
local otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import CachingDecision, PriceVector, SystemParams, Task, UserProfile, uplink_rate


@dataclass(frozen=True)
class FrequencyDistribution:
    """Population distribution of local CPU frequencies (cycles/s)."""

    f_min: float
    f_max: float
    kind: str = "uniform"

    def __post_init__(self) -> None:
        if self.kind != "uniform":
            raise ValueError(f"unsupported frequency distribution kind: {self.kind!r}")
        if not 0 < self.f_min < self.f_max:
            raise ValueError("need 0 < f_min < f_max")

    def cdf(self, x: float) -> float:
        """P(f <= x); accepts +inf."""
        if x >= self.f_max:
            return 1.0
        if x <= self.f_min:
            return 0.0
        return (x - self.f_min) / (self.f_max - self.f_min)

    def sample(self, rng: np.random.Generator, size: int | None = None):
        return rng.uniform(self.f_min, self.f_max, size=size)


@dataclass(frozen=True)
class PopularityVector:
    """Probability vector over programs."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("popularity must be a nonempty 1-d array")
        if (values < 0).any():
            raise ValueError("popularity entries must be nonnegative")
        if abs(float(values.sum()) - 1.0) > 1e-9:
            raise ValueError("popularity must sum to 1")
        object.__setattr__(self, "values", values)

    @classmethod
    def uniform(cls, n: int) -> "PopularityVector":
        return cls(np.full(n, 1.0 / n))


def offload_probability(
    price: float, dist: FrequencyDistribution, theta: float
) -> float:
    """Probability that a random user's characteristic parameter clears ``price``.

    A user offloads iff ``price <= theta / f``, i.e. iff ``f <= theta / price``;
    a zero price is cleared by every frequency.
    """
    if price < 0:
        raise ValueError("price must be nonnegative")
    if price == 0.0:
        return 1.0
    return dist.cdf(theta / price)


def estimate_offloaders(
    prices: PriceVector,
    caching: CachingDecision,
    popularity: PopularityVector,
    num_users: int,
    dist: FrequencyDistribution,
    params: SystemParams,
) -> float:
    """Expected number of offloaders as seen by one user.

    The user counts itself plus, for each of the other ``num_users - 1``
    users, the probability that its program is cached and its frequency is
    low enough to clear the program's price.
    """
    if num_users < 1:
        raise ValueError("num_users must be at least 1")
    acc = 0.0
    for n in range(caching.num_programs):
        if caching.mask[n]:
            acc += popularity.values[n] * offload_probability(
                float(prices.values[n]), dist, params.delay_cost_theta
            )
    return 1.0 + (num_users - 1) * acc


def delta_threshold(
    user: UserProfile, task: Task, m_hat: float, params: SystemParams
) -> float:
    """Offloading proportion that balances the remote and local finish times."""
    rate = uplink_rate(user, m_hat, params)
    r = task.cycles
    loc_time = r / user.cpu_freq_hz
    remote_time = task.data_bits / rate + r / (params.edge_freq_hz / m_hat)
    return loc_time / (remote_time + loc_time)


def optimal_alpha(
    price: float,
    user: UserProfile,
    task: Task,
    m_hat: float,
    cached: bool,
    params: SystemParams,
) -> float:
    """Cost-minimizing offloading proportion given price and demand estimate."""
    if not cached:
        return 0.0
    if price <= params.delay_cost_theta / user.cpu_freq_hz:
        return delta_threshold(user, task, m_hat, params)
    return 0.0


def baseline_profile(
    kind: str,
    users: list[UserProfile],
    programs: np.ndarray,
    caching: CachingDecision,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Non-strategic offloading baselines.

    ``co``: offload everything cached; ``lc``: all local; ``ro``: iid uniform
    proportions, masked to cached programs (so that with a full cache the
    draw is plain iid uniform).
    """
    m = len(users)
    cached = caching.mask[programs].astype(bool)
    if kind == "co":
        return np.where(cached, 1.0, 0.0)
    if kind == "lc":
        return np.zeros(m)
    if kind == "ro":
        if rng is None:
            raise ValueError("the random baseline needs a generator")
        alphas = rng.uniform(0.0, 1.0, size=m)
        alphas[~cached] = 0.0
        return alphas
    raise ValueError(f"unknown baseline kind: {kind!r}")
