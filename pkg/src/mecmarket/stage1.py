"""Leader (base station) side of the per-slot game.

The base station prices each cached program, anticipating the users' step
best responses through the demand estimate ``m_hat``. Pricing algorithms:

* ``cpto`` — exact: the optimal price is one of the users' characteristic
  parameters ``theta / f``; scan them all and keep the best (ties go to the
  lowest price).
* ``scao`` — approximate: replace the profit step function with a sigmoid,
  find the stationary points of the smoothed profit, and score them with the
  true profit.
* ``dpo`` — global-best particle swarm over the price interval.
* ``lp`` — non-strategic linear pricing proportional to the mean task size.

``stackelberg_equilibrium`` alternates demand estimation and simultaneous
per-program re-pricing until the prices stop moving.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .model import (
    CachingDecision,
    OffloadProfile,
    PriceVector,
    SystemParams,
    Task,
    UserProfile,
    channel_gain,
)
from .stage2 import (
    FrequencyDistribution,
    PopularityVector,
    estimate_offloaders,
    optimal_alpha,
)

PRICER_NAMES = ("cpto", "scao", "dpo", "lp")

# Linear-pricing slope: currency per cycle of mean task size.
LP_PRICE_WEIGHT = 3e-9

# Particle swarm hyperparameters (constriction-style standard values).
PSO_POPULATION = 100
PSO_ITERATIONS = 200
PSO_INERTIA = 0.729
PSO_COGNITIVE = 1.49445
PSO_SOCIAL = 1.49445

# Search interval for the iterative pricers: [0, PRICE_SPAN * max(theta / f)].
PRICE_SPAN = 1.05


@dataclass(frozen=True)
class SlotMarket:
    """Everything one slot's game needs: users, tasks, cache, beliefs."""

    users: tuple[UserProfile, ...]
    tasks: tuple[Task, ...]
    programs: np.ndarray
    caching: CachingDecision
    popularity: PopularityVector
    freq_dist: FrequencyDistribution
    params: SystemParams

    def __post_init__(self) -> None:
        object.__setattr__(self, "users", tuple(self.users))
        object.__setattr__(self, "tasks", tuple(self.tasks))
        programs = np.asarray(self.programs, dtype=np.int64)
        object.__setattr__(self, "programs", programs)
        if len(self.users) != len(self.tasks) or len(self.users) != programs.size:
            raise ValueError("users, tasks and programs must have equal length")
        n = self.params.num_programs
        if programs.size and (programs.min() < 0 or programs.max() >= n):
            raise ValueError("program assignment out of range")
        if self.caching.num_programs != n or self.popularity.values.size != n:
            raise ValueError("caching mask and popularity must cover all programs")

    @property
    def num_users(self) -> int:
        return len(self.users)

    @cached_property
    def cycles(self) -> np.ndarray:
        return np.array([t.cycles for t in self.tasks])

    @cached_property
    def data_bits(self) -> np.ndarray:
        return np.array([t.data_bits for t in self.tasks])

    @cached_property
    def cpu_freqs(self) -> np.ndarray:
        return np.array([u.cpu_freq_hz for u in self.users])

    @cached_property
    def char(self) -> np.ndarray:
        """Characteristic parameters theta / f, one per user."""
        return self.params.delay_cost_theta / self.cpu_freqs

    @cached_property
    def log2_snr1(self) -> np.ndarray:
        """log2(1 + SNR) per user; the uplink rate is bandwidth / m_hat times this."""
        snr = np.array(
            [u.transmit_power_w * channel_gain(u, self.params) / self.params.noise_w
             for u in self.users]
        )
        return np.log2(1.0 + snr)

    @cached_property
    def cached_users(self) -> np.ndarray:
        return self.caching.mask[self.programs].astype(bool)

    def users_for_program(self, n: int) -> np.ndarray:
        return np.nonzero(self.programs == n)[0]

    def deltas(self, m_hat: float) -> np.ndarray:
        """Threshold offloading proportions at the given demand estimate."""
        p = self.params
        rates = (p.bandwidth_hz / m_hat) * self.log2_snr1
        remote = self.data_bits / rates + self.cycles / (p.edge_freq_hz / m_hat)
        loc = self.cycles / self.cpu_freqs
        return loc / (remote + loc)


def program_profit(price: float, market: SlotMarket, n: int, m_hat: float) -> float:
    """Base-station profit from program ``n`` at one price, given ``m_hat``."""
    if price < 0:
        raise ValueError("price must be nonnegative")
    if not market.caching.mask[n]:
        return 0.0
    users = market.users_for_program(n)
    if users.size == 0:
        return 0.0
    weight = market.deltas(m_hat)[users] * market.cycles[users]
    return float(kernels.step_profit(np.array([price]), market.char[users], weight)[0])


def cpto(
    market: SlotMarket, n: int, m_hat: float, rng: np.random.Generator | None = None
) -> float:
    """Exact optimal price: best of the users' characteristic parameters.

    Traverses every candidate and re-evaluates the exact profit user by
    user from the threshold best-response formula, so the cost grows
    quadratically with the program's audience — the price of exactness;
    the smoothed and swarm pricers trade it away.
    """
    if not market.caching.mask[n]:
        return 0.0
    users = market.users_for_program(n)
    if users.size == 0:
        return 0.0
    char = market.char[users]
    members = [(market.users[i], market.tasks[i]) for i in users]
    params = market.params
    best_price = 0.0
    best_profit = 0.0
    for price in np.sort(char):
        total = 0.0
        for user, task in members:
            alpha = optimal_alpha(float(price), user, task, m_hat, True, params)
            total += alpha * task.cycles
        profit = total * price
        if profit > best_profit:
            best_price = float(price)
            best_profit = profit
    return best_price


def scao_profit_smooth(price: float, market: SlotMarket, n: int, m_hat: float) -> float:
    """Sigmoid-smoothed profit for program ``n`` at one price."""
    users = market.users_for_program(n)
    if not market.caching.mask[n] or users.size == 0:
        return 0.0
    weight = market.deltas(m_hat)[users] * market.cycles[users]
    u, _ = kernels.smooth_profit_grad(np.array([price]), market.char[users], weight)
    return float(u[0])


def scao_gradient(price: float, market: SlotMarket, n: int, m_hat: float) -> float:
    """Price derivative of the smoothed profit for program ``n``."""
    users = market.users_for_program(n)
    if not market.caching.mask[n] or users.size == 0:
        return 0.0
    weight = market.deltas(m_hat)[users] * market.cycles[users]
    _, g = kernels.smooth_profit_grad(np.array([price]), market.char[users], weight)
    return float(g[0])


def scao(
    market: SlotMarket, n: int, m_hat: float, rng: np.random.Generator | None = None
) -> float:
    """Stationary points of the smoothed profit, scored by the true profit."""
    if not market.caching.mask[n]:
        return 0.0
    users = market.users_for_program(n)
    if users.size == 0:
        return 0.0
    char = market.char[users]
    weight = market.deltas(m_hat)[users] * market.cycles[users]
    hi = PRICE_SPAN * float(char.max())
    return float(kernels.scao_best_price(char, weight, hi))


def dpo(
    market: SlotMarket, n: int, m_hat: float, rng: np.random.Generator | None = None
) -> float:
    """Global-best particle swarm over the price interval."""
    if not market.caching.mask[n]:
        return 0.0
    users = market.users_for_program(n)
    if users.size == 0:
        return 0.0
    if rng is None:
        raise ValueError("dpo needs a random generator")
    char = market.char[users]
    weight = market.deltas(m_hat)[users] * market.cycles[users]
    hi = PRICE_SPAN * float(char.max())

    x = rng.uniform(0.0, hi, PSO_POPULATION)
    v = np.zeros(PSO_POPULATION)
    pbest = x.copy()
    pbest_profit = kernels.step_profit(x, char, weight)
    g = int(np.argmax(pbest_profit))
    gbest = float(pbest[g])
    gbest_profit = float(pbest_profit[g])
    for _ in range(PSO_ITERATIONS):
        r1 = rng.uniform(size=PSO_POPULATION)
        r2 = rng.uniform(size=PSO_POPULATION)
        v = (PSO_INERTIA * v
             + PSO_COGNITIVE * r1 * (pbest - x)
             + PSO_SOCIAL * r2 * (gbest - x))
        np.clip(v, -hi, hi, out=v)
        x = np.clip(x + v, 0.0, hi)
        profit = kernels.step_profit(x, char, weight)
        better = profit > pbest_profit
        pbest[better] = x[better]
        pbest_profit[better] = profit[better]
        g = int(np.argmax(pbest_profit))
        if float(pbest_profit[g]) > gbest_profit:
            gbest = float(pbest[g])
            gbest_profit = float(pbest_profit[g])
    return gbest


def lp(
    market: SlotMarket, n: int, m_hat: float, rng: np.random.Generator | None = None
) -> float:
    """Linear pricing: slope times the mean task size of the program's users."""
    if not market.caching.mask[n]:
        return 0.0
    users = market.users_for_program(n)
    if users.size == 0:
        return 0.0
    return LP_PRICE_WEIGHT * float(market.cycles[users].mean())


PRICERS: dict[str, Callable[..., float]] = {
    "cpto": cpto,
    "scao": scao,
    "dpo": dpo,
    "lp": lp,
}


def respond(
    market: SlotMarket, prices: PriceVector, m_hat: float | None = None
) -> tuple[OffloadProfile, float]:
    """Users' joint best response to posted prices.

    ``m_hat`` defaults to the demand estimate from the posted prices; passing
    an explicit value reproduces the complete-information variant.
    """
    if m_hat is None:
        if market.num_users == 0:
            m_hat = 1.0
        else:
            m_hat = estimate_offloaders(
                prices, market.caching, market.popularity, market.num_users,
                market.freq_dist, market.params,
            )
    if market.num_users == 0:
        return OffloadProfile(np.zeros(0)), m_hat
    price_per_user = prices.values[market.programs]
    alphas = kernels.best_response_alphas(
        price_per_user, market.char, market.deltas(m_hat), market.cached_users
    )
    return OffloadProfile(alphas), m_hat


@dataclass(frozen=True)
class EquilibriumResult:
    prices: PriceVector
    profile: OffloadProfile
    m_hat: float
    iterations: int
    converged: bool


class PricingTimer:
    """Accumulates wall-clock seconds spent inside pricing calls."""

    def __init__(self) -> None:
        self.seconds = 0.0


def _realized_payment(market: SlotMarket, prices: np.ndarray) -> float:
    """Total payment when users best-respond to the given prices."""
    pv = PriceVector(prices)
    profile, _ = respond(market, pv)
    if market.num_users == 0:
        return 0.0
    per_user = profile.alphas * market.cycles * pv.values[market.programs]
    return float(per_user.sum())


def stackelberg_equilibrium(
    market: SlotMarket,
    pricer: str = "cpto",
    *,
    rng: np.random.Generator | None = None,
    init_prices: PriceVector | None = None,
    tol: float = 1e-6,
    max_iter: int = 100,
    timer: PricingTimer | None = None,
) -> EquilibriumResult:
    """Alternate demand estimation and per-program re-pricing to a fixed point.

    Starts from all-zero prices (so the first demand estimate assumes every
    user may offload), re-prices all programs simultaneously against the
    current estimate, and stops when the largest relative price change drops
    below ``tol``. Non-convergence within ``max_iter`` rounds is reported via
    the ``converged`` flag, not raised; a non-converged run returns the
    visited price vector with the highest realized payment rather than
    whichever cycle point the last round happened to land on.
    """
    if pricer not in PRICERS:
        raise ValueError(f"unknown pricer: {pricer!r}")
    price_fn = PRICERS[pricer]
    n_prog = market.params.num_programs
    prices = np.zeros(n_prog) if init_prices is None else init_prices.values.copy()

    pricer_rng: np.random.Generator | None = None
    dpo_seed = None
    if pricer == "dpo":
        src = rng if rng is not None else np.random.default_rng(0)
        # One seed per equilibrium call keeps the pricing map deterministic
        # across rounds, so the fixed-point iteration can actually converge.
        dpo_seed = int(src.integers(0, 2**63))

    iterations = 0
    converged = False
    visited: list[np.ndarray] = []
    for _ in range(max_iter):
        iterations += 1
        if market.num_users == 0:
            m_hat = 1.0
        else:
            m_hat = estimate_offloaders(
                PriceVector(prices), market.caching, market.popularity,
                market.num_users, market.freq_dist, market.params,
            )
        new_prices = np.zeros(n_prog)
        t0 = time.perf_counter()
        for n in range(n_prog):
            if pricer == "dpo":
                pricer_rng = np.random.default_rng((dpo_seed, n))
            new_prices[n] = price_fn(market, n, m_hat, rng=pricer_rng)
        if timer is not None:
            timer.seconds += time.perf_counter() - t0
        visited.append(new_prices)
        scale = np.maximum(np.abs(prices), np.abs(new_prices))
        diff = np.abs(new_prices - prices)
        rel = np.where(scale > 0.0, diff / np.where(scale > 0.0, scale, 1.0), 0.0)
        prices = new_prices
        if float(rel.max(initial=0.0)) < tol:
            converged = True
            break

    if not converged and len(visited) > 1:
        prices = max(visited, key=lambda pv: _realized_payment(market, pv))
    final = PriceVector(prices)
    profile, m_hat = respond(market, final)
    return EquilibriumResult(
        prices=final, profile=profile, m_hat=m_hat,
        iterations=iterations, converged=converged,
    )


def ltsp_schedule(slot_markets: Sequence[SlotMarket]) -> list[PriceVector]:
    """Long-term static pricing: solve the first slot, reuse its prices."""
    if not slot_markets:
        raise ValueError("need at least one slot market")
    eq = stackelberg_equilibrium(slot_markets[0], "cpto")
    return [eq.prices for _ in slot_markets]


@dataclass(frozen=True)
class SlotOutcome:
    """Realized quantities of one slot under a given price/offload pair."""

    payments_per_user: np.ndarray
    delays_per_user: np.ndarray
    costs_per_user: np.ndarray
    per_program_payments: np.ndarray
    bs_payment: float
    offloader_count: int


def evaluate_slot(
    market: SlotMarket, prices: PriceVector, profile: OffloadProfile
) -> SlotOutcome:
    """Experienced payments, delays and costs under the realized offloader count."""
    from .model import delays as delay_fn

    m = market.num_users
    alphas = profile.alphas
    if alphas.size != m:
        raise ValueError("profile does not match the market")
    count = int((alphas > 0).sum())
    count_eff = max(count, 1)
    payments = np.zeros(m)
    delay_totals = np.zeros(m)
    costs = np.zeros(m)
    theta = market.params.delay_cost_theta
    for i in range(m):
        prog = int(market.programs[i])
        pay = alphas[i] * market.tasks[i].cycles * prices.values[prog] * market.caching.mask[prog]
        d = delay_fn(alphas[i], market.users[i], market.tasks[i], count_eff, market.params)
        payments[i] = pay
        delay_totals[i] = d.total
        costs[i] = pay + theta * d.total
    per_program = np.zeros(market.params.num_programs)
    np.add.at(per_program, market.programs, payments)
    return SlotOutcome(
        payments_per_user=payments,
        delays_per_user=delay_totals,
        costs_per_user=costs,
        per_program_payments=per_program,
        bs_payment=float(payments.sum()),
        offloader_count=count,
    )
