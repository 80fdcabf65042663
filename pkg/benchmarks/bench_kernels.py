#!/usr/bin/env python3
"""Timing comparison: pure-numpy kernels vs the compiled loop kernels.

Times each hot kernel on market-sized random inputs, then the three
pricing algorithms end to end on one M-user slot (whichever backend the
package selected; set MECMARKET_NUMBA=0 to force the numpy path).

Run: python benchmarks/bench_kernels.py [--users 100] [--repeat 50]
"""
import argparse
import time

import numpy as np

from mecmarket import kernels
from mecmarket import _kernels_numpy as knp
from mecmarket.model import CachingDecision, SystemParams, Task, UserProfile
from mecmarket.stage1 import SlotMarket, cpto, dpo, scao
from mecmarket.stage2 import FrequencyDistribution, PopularityVector

try:
    from mecmarket import _kernels_numba as knb
except ImportError:
    knb = None


def bench(fn, args, repeat):
    fn(*args)  # warm-up (and numba compile)
    start = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - start) / repeat


def random_market(m, rng):
    params = SystemParams()
    users = tuple(
        UserProfile(rng.uniform(0.08, 0.2), rng.uniform(100, 1000),
                    rng.exponential(1.0), rng.uniform(0.5e6, 4e6))
        for _ in range(m))
    tasks = tuple(
        Task(rng.uniform(200, 1000) * 8192, rng.uniform(800, 2000))
        for _ in range(m))
    programs = rng.integers(0, params.num_programs, size=m)
    caching = CachingDecision(np.ones(params.num_programs, dtype=np.int8),
                              np.full(params.num_programs, 25.0))
    pop = PopularityVector.uniform(params.num_programs)
    dist = FrequencyDistribution(0.5e6, 4e6)
    return SlotMarket(users, tasks, programs, caching, pop, dist, params)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--users", type=int, default=100)
    ap.add_argument("--repeat", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    m = args.users
    char = np.sort(rng.uniform(5.0, 40.0, size=m))
    weight = rng.uniform(1e8, 1e9, size=m)
    prices = rng.uniform(0.0, 45.0, size=256)
    delta = rng.uniform(0.0, 1.0, size=m)
    cached = rng.integers(0, 2, size=m).astype(bool)
    hi = 1.05 * char.max()

    cases = [
        ("step_profit", (prices, char, weight)),
        ("smooth_profit_grad", (prices, char, weight)),
        ("best_response_alphas", (prices[:m], char, delta, cached)),
        ("scao_best_price", (char, weight, hi)),
    ]
    print(f"kernel timings, mean of {args.repeat} runs "
          f"({m} users; active backend: {kernels.BACKEND})")
    print(f"{'kernel':24s} {'numpy':>12s} {'numba':>12s} {'speedup':>9s}")
    for name, xs in cases:
        t_np = bench(getattr(knp, name), xs, args.repeat)
        if knb is None:
            print(f"{name:24s} {t_np * 1e3:10.3f}ms {'-':>12s} {'-':>9s}")
            continue
        t_nb = bench(getattr(knb, name), xs, args.repeat)
        print(f"{name:24s} {t_np * 1e3:10.3f}ms {t_nb * 1e3:10.3f}ms "
              f"{t_np / t_nb:8.1f}x")

    market = random_market(m, rng)
    m_hat = 1 + 0.5 * (m - 1)
    reps = max(1, args.repeat // 10)
    print(f"\npricers, all programs of one {m}-user slot "
          f"(backend: {kernels.BACKEND})")
    progs = range(market.params.num_programs)
    for name, fn in [
            ("cpto", lambda: [cpto(market, n, m_hat) for n in progs]),
            ("scao", lambda: [scao(market, n, m_hat) for n in progs]),
            ("dpo", lambda: [dpo(market, n, m_hat,
                                 rng=np.random.default_rng(n)) for n in progs])]:
        t = bench(lambda *_: fn(), (), reps)
        print(f"{name:24s} {t * 1e3:10.3f}ms")


if __name__ == "__main__":
    main()
