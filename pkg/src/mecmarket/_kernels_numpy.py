"""Pure-numpy implementations of the hot array kernels.

Mirrors the signatures in ``_kernels_numba``; ``mecmarket.kernels`` picks one
backend at import time (see the ``MECMARKET_NUMBA`` environment flag).
"""
from __future__ import annotations

import numpy as np


def _sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    out = np.empty_like(x)
    pos = x >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def step_profit(prices: np.ndarray, char: np.ndarray, weight: np.ndarray) -> np.ndarray:
    """Program profit at each candidate price under threshold offloading.

    A user offloads iff the price does not exceed its characteristic
    parameter ``char[m]`` (ties offload), contributing ``weight[m] * price``
    where ``weight[m] = delta[m] * cycles[m]``.
    """
    prices = np.atleast_1d(np.asarray(prices, dtype=np.float64))
    take = char[None, :] >= prices[:, None]
    return prices * (take @ weight)


def smooth_profit_grad(
    prices: np.ndarray, char: np.ndarray, weight: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Sigmoid-smoothed program profit and its price derivative, per price."""
    prices = np.atleast_1d(np.asarray(prices, dtype=np.float64))
    s = _sigmoid(char[None, :] - prices[:, None])
    sw = s @ weight
    u = prices * sw
    g = sw - prices * ((s * (1.0 - s)) @ weight)
    return u, g


def best_response_alphas(
    price_per_user: np.ndarray,
    char: np.ndarray,
    delta: np.ndarray,
    cached: np.ndarray,
) -> np.ndarray:
    """Cost-minimizing offloading proportion per user: delta or zero."""
    take = cached & (price_per_user <= char)
    return np.where(take, delta, 0.0)


def scao_best_price(
    char: np.ndarray,
    weight: np.ndarray,
    hi: float,
    n_grid: int = 64,
    rel_tol: float = 1e-9,
    max_iter: int = 128,
) -> float:
    """Smoothed-profit stationary-point search, scored by the true profit.

    Scans the sign of the smoothed-profit gradient over an ``n_grid``-point
    grid on [0, hi], bisects every sign-change bracket down to relative width
    ``rel_tol``, then evaluates the exact step profit at each root and both
    endpoints and returns the best price (ties go to the lower price).
    """
    if char.size == 0:
        return 0.0
    grid = np.linspace(0.0, hi, n_grid)
    _, g = smooth_profit_grad(grid, char, weight)

    roots = [float(grid[i]) for i in range(n_grid) if g[i] == 0.0]
    idx = np.nonzero(g[:-1] * g[1:] < 0.0)[0]
    if idx.size:
        a = grid[idx].copy()
        b = grid[idx + 1].copy()
        ga = g[idx].copy()
        for _ in range(max_iter):
            active = (b - a) > rel_tol * np.maximum(np.abs(a), np.abs(b))
            if not active.any():
                break
            mid = 0.5 * (a + b)
            _, gm = smooth_profit_grad(mid, char, weight)
            exact = active & (gm == 0.0)
            same = active & ~exact & (np.sign(gm) == np.sign(ga))
            other = active & ~exact & ~same
            a = np.where(exact | same, mid, a)
            b = np.where(exact | other, mid, b)
            ga = np.where(same, gm, ga)
        roots.extend((0.5 * (a + b)).tolist())

    candidates = np.sort(np.array(roots + [0.0, hi], dtype=np.float64))
    profits = step_profit(candidates, char, weight)
    best_price = 0.0
    best_profit = 0.0
    for c, p in zip(candidates, profits):
        if p > best_profit:
            best_price = float(c)
            best_profit = float(p)
    return best_price
