"""Kernel backend selection.

The hot inner loops (profit scans, the smoothed-profit root search, user best
responses) exist twice: compiled with numba (``_kernels_numba``) and as pure
numpy (``_kernels_numpy``). The numba build is used when available; set
``MECMARKET_NUMBA=0`` to force the numpy path. Both backends produce equal
results up to floating-point summation order.
"""
from __future__ import annotations

import os
import warnings

_flag = os.environ.get("MECMARKET_NUMBA", "auto").strip().lower()

if _flag in ("0", "false", "no", "off"):
    from . import _kernels_numpy as _impl

    BACKEND = "numpy"
else:
    try:
        from . import _kernels_numba as _impl

        BACKEND = "numba"
    except ImportError:  # pragma: no cover - depends on the environment
        if _flag in ("1", "true", "yes", "on"):
            warnings.warn("numba requested via MECMARKET_NUMBA but not importable; "
                          "falling back to the numpy kernels")
        from . import _kernels_numpy as _impl

        BACKEND = "numpy"

step_profit = _impl.step_profit
smooth_profit_grad = _impl.smooth_profit_grad
best_response_alphas = _impl.best_response_alphas
scao_best_price = _impl.scao_best_price
