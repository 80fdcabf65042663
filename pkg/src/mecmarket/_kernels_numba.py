"""Numba-compiled implementations of the hot array kernels.

Same signatures and semantics as ``_kernels_numpy``; loop bodies are explicit
so the whole kernel fuses into one compiled call.
"""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _sigmoid(x: float) -> float:
    if x >= 0.0:
        return 1.0 / (1.0 + np.exp(-x))
    ex = np.exp(x)
    return ex / (1.0 + ex)


@njit(cache=True)
def step_profit(prices, char, weight):
    out = np.empty(prices.size, dtype=np.float64)
    for c in range(prices.size):
        p = prices[c]
        acc = 0.0
        for m in range(char.size):
            if char[m] >= p:
                acc += weight[m]
        out[c] = p * acc
    return out


@njit(cache=True)
def _step_profit_one(p, char, weight):
    acc = 0.0
    for m in range(char.size):
        if char[m] >= p:
            acc += weight[m]
    return p * acc


@njit(cache=True)
def smooth_profit_grad(prices, char, weight):
    u = np.empty(prices.size, dtype=np.float64)
    g = np.empty(prices.size, dtype=np.float64)
    for c in range(prices.size):
        p = prices[c]
        sw = 0.0
        sg = 0.0
        for m in range(char.size):
            s = _sigmoid(char[m] - p)
            sw += weight[m] * s
            sg += weight[m] * (s * (1.0 - s))
        u[c] = p * sw
        g[c] = sw - p * sg
    return u, g


@njit(cache=True)
def _grad_one(p, char, weight):
    sw = 0.0
    sg = 0.0
    for m in range(char.size):
        s = _sigmoid(char[m] - p)
        sw += weight[m] * s
        sg += weight[m] * (s * (1.0 - s))
    return sw - p * sg


@njit(cache=True)
def best_response_alphas(price_per_user, char, delta, cached):
    out = np.zeros(char.size, dtype=np.float64)
    for m in range(char.size):
        if cached[m] and price_per_user[m] <= char[m]:
            out[m] = delta[m]
    return out


@njit(cache=True)
def scao_best_price(char, weight, hi, n_grid=64, rel_tol=1e-9, max_iter=128):
    if char.size == 0:
        return 0.0
    grid = np.linspace(0.0, hi, n_grid)
    g = np.empty(n_grid, dtype=np.float64)
    for i in range(n_grid):
        g[i] = _grad_one(grid[i], char, weight)

    roots = np.empty(2 * n_grid + 2, dtype=np.float64)
    n_roots = 0
    for i in range(n_grid):
        if g[i] == 0.0:
            roots[n_roots] = grid[i]
            n_roots += 1
    for i in range(n_grid - 1):
        if g[i] * g[i + 1] < 0.0:
            a = grid[i]
            b = grid[i + 1]
            ga = g[i]
            for _ in range(max_iter):
                if (b - a) <= rel_tol * max(abs(a), abs(b)):
                    break
                mid = 0.5 * (a + b)
                gm = _grad_one(mid, char, weight)
                if gm == 0.0:
                    a = mid
                    b = mid
                elif (gm > 0.0) == (ga > 0.0):
                    a = mid
                    ga = gm
                else:
                    b = mid
            roots[n_roots] = 0.5 * (a + b)
            n_roots += 1

    roots[n_roots] = 0.0
    n_roots += 1
    roots[n_roots] = hi
    n_roots += 1
    candidates = np.sort(roots[:n_roots])
    best_price = 0.0
    best_profit = 0.0
    for c in range(n_roots):
        p = _step_profit_one(candidates[c], char, weight)
        if p > best_profit:
            best_price = candidates[c]
            best_profit = p
    return best_price
