"""Physical system model: channels, uplink rates, delays, costs, utilities.

Conventions used throughout the package:

* data sizes are in bits (1 KB = 8 * 1024 bits), CPU work in cycles,
  CPU speeds in cycles/s, powers in watts, distances in meters,
  prices in currency per cycle, all floats are float64;
* a task of ``d`` bits at ``beta`` cycles/bit costs ``r = d * beta`` cycles;
* a user splits its task: proportion ``alpha`` is offloaded to the edge
  server (only possible when its program is cached), the rest runs locally;
  transmission and edge execution are sequential, local execution runs in
  parallel, so the experienced delay is ``max(tra + exe, loc)``;
* offloaders share the uplink bandwidth and the edge CPU equally, so both
  the rate and the edge speed are divided by the number of offloaders
  (fractional counts are allowed: market estimates are expectations).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

BITS_PER_KB = 8 * 1024
MHZ = 1e6


@dataclass(frozen=True)
class SystemParams:
    """Scenario-wide constants."""

    bandwidth_hz: float = 2e6
    edge_freq_hz: float = 1e8
    noise_w: float = 1e-10
    delay_cost_theta: float = 2e7
    pathloss_const: float = 1.0
    pathloss_exp: float = 2.0
    cache_capacity: float = 100.0
    caching_cost_rate: float = 0.10
    num_programs: int = 4
    num_frames: int = 5
    num_slots: int = 5

    def __post_init__(self) -> None:
        for name in ("bandwidth_hz", "edge_freq_hz", "noise_w", "delay_cost_theta",
                     "pathloss_const"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.pathloss_exp < 0:
            raise ValueError("pathloss_exp must be nonnegative")
        if self.cache_capacity < 0:
            raise ValueError("cache_capacity must be nonnegative")
        if not 0.0 <= self.caching_cost_rate:
            raise ValueError("caching_cost_rate must be nonnegative")
        for name in ("num_programs", "num_frames", "num_slots"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")


@dataclass(frozen=True)
class UserProfile:
    """Per-user radio and compute parameters for one slot."""

    transmit_power_w: float
    distance_m: float
    fading: float
    cpu_freq_hz: float

    def __post_init__(self) -> None:
        if self.transmit_power_w <= 0 or self.distance_m <= 0 or self.cpu_freq_hz <= 0:
            raise ValueError("power, distance and cpu frequency must be positive")
        if self.fading < 0:
            raise ValueError("fading must be nonnegative")


@dataclass(frozen=True)
class Task:
    """One computation task; total work is derived as data_bits * cycles_per_bit."""

    data_bits: float
    cycles_per_bit: float

    def __post_init__(self) -> None:
        if self.data_bits <= 0 or self.cycles_per_bit <= 0:
            raise ValueError("data_bits and cycles_per_bit must be positive")

    @property
    def cycles(self) -> float:
        return self.data_bits * self.cycles_per_bit


@dataclass(frozen=True)
class CachingDecision:
    """Binary caching mask over programs plus the per-program storage sizes."""

    mask: np.ndarray
    sizes: np.ndarray

    def __post_init__(self) -> None:
        mask = np.asarray(self.mask, dtype=np.int8)
        sizes = np.asarray(self.sizes, dtype=np.float64)
        if mask.ndim != 1 or mask.shape != sizes.shape:
            raise ValueError("mask and sizes must be 1-d arrays of equal length")
        if not np.isin(mask, (0, 1)).all():
            raise ValueError("mask entries must be 0 or 1")
        if (sizes < 0).any():
            raise ValueError("sizes must be nonnegative")
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "sizes", sizes)

    @property
    def num_programs(self) -> int:
        return int(self.mask.size)

    def feasible(self, capacity: float) -> bool:
        return float(self.mask @ self.sizes) <= capacity

    def used(self) -> float:
        return float(self.mask @ self.sizes)

    def encode(self) -> int:
        """Decimal action code: sum of mask[n] * 2**n."""
        return int(sum(int(x) << n for n, x in enumerate(self.mask)))

    @classmethod
    def from_code(cls, code: int, sizes: np.ndarray) -> "CachingDecision":
        sizes = np.asarray(sizes, dtype=np.float64)
        n = sizes.size
        if not 0 <= code < (1 << n):
            raise ValueError(f"action code {code} out of range for {n} programs")
        mask = np.array([(code >> i) & 1 for i in range(n)], dtype=np.int8)
        return cls(mask=mask, sizes=sizes)


@dataclass(frozen=True)
class PriceVector:
    """Per-program unit prices (currency per CPU cycle)."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise ValueError("prices must be a 1-d array")
        if (values < 0).any() or not np.isfinite(values).all():
            raise ValueError("prices must be finite and nonnegative")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class OffloadProfile:
    """Offloading proportions, one per user."""

    alphas: np.ndarray

    def __post_init__(self) -> None:
        alphas = np.asarray(self.alphas, dtype=np.float64)
        if alphas.ndim != 1:
            raise ValueError("alphas must be a 1-d array")
        if (alphas < 0).any() or (alphas > 1).any():
            raise ValueError("alphas must lie in [0, 1]")
        object.__setattr__(self, "alphas", alphas)

    @property
    def offloader_count(self) -> int:
        return int((self.alphas > 0).sum())


class DelayBreakdown(NamedTuple):
    tra: float
    exe: float
    loc: float
    total: float


def channel_gain(user: UserProfile, params: SystemParams) -> float:
    """Uplink channel gain: pathloss_const * fading * distance**(-pathloss_exp)."""
    return params.pathloss_const * user.fading * user.distance_m ** (-params.pathloss_exp)


def uplink_rate(user: UserProfile, offloader_count: float, params: SystemParams) -> float:
    """Shannon uplink rate in bits/s with the bandwidth split across offloaders."""
    if offloader_count <= 0:
        raise ValueError("offloader_count must be positive")
    snr = user.transmit_power_w * channel_gain(user, params) / params.noise_w
    return (params.bandwidth_hz / offloader_count) * np.log2(1.0 + snr)


def delays(
    alpha: float,
    user: UserProfile,
    task: Task,
    offloader_count: float,
    params: SystemParams,
) -> DelayBreakdown:
    """Transmission, edge-execution, local delays and the experienced total.

    ``offloader_count`` may be fractional (an estimate); it must be positive
    whenever ``alpha > 0``.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    loc = (1.0 - alpha) * task.cycles / user.cpu_freq_hz
    if alpha == 0.0:
        return DelayBreakdown(0.0, 0.0, loc, loc)
    if offloader_count < 1.0:
        raise ValueError("offloader_count must be at least 1 when offloading")
    rate = uplink_rate(user, offloader_count, params)
    if rate <= 0.0:
        raise ValueError("uplink rate is zero; cannot offload")
    tra = alpha * task.data_bits / rate
    exe = alpha * task.cycles / (params.edge_freq_hz / offloader_count)
    return DelayBreakdown(tra, exe, loc, max(tra + exe, loc))


def user_cost(
    alpha: float,
    price: float,
    user: UserProfile,
    task: Task,
    offloader_count: float,
    cached: bool,
    params: SystemParams,
) -> float:
    """Payment plus delay cost for one user; offloading requires a cached program."""
    if alpha > 0.0 and not cached:
        raise ValueError("cannot offload: the task's program is not cached")
    payment = alpha * task.cycles * price if cached else 0.0
    d = delays(alpha, user, task, offloader_count, params)
    return payment + params.delay_cost_theta * d.total


def bs_slot_payment(
    prices: PriceVector,
    profile: OffloadProfile,
    tasks: Sequence[Task],
    programs: np.ndarray,
    caching: CachingDecision,
) -> float:
    """Base-station revenue in one slot: sum of alpha * cycles * price over cached programs."""
    total = 0.0
    for alpha, task, prog in zip(profile.alphas, tasks, programs):
        total += alpha * task.cycles * prices.values[prog] * caching.mask[prog]
    return total


def bs_frame_utility(
    slot_payments: Sequence[float],
    caching_now: CachingDecision,
    caching_prev: CachingDecision,
    per_program_payments: np.ndarray,
    caching_cost_rate: float,
) -> float:
    """Frame utility: total slot revenue minus the cost of newly cached programs.

    Caching program ``n`` this frame when it was not cached in the previous
    frame costs ``caching_cost_rate * per_program_payments[n]``.
    """
    newly = (1 - caching_prev.mask) * caching_now.mask
    cost = float(newly @ (caching_cost_rate * np.asarray(per_program_payments, dtype=np.float64)))
    return float(sum(slot_payments)) - cost
