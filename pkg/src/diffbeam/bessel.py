"""Integer-order Bessel functions of the first kind.

Miller's algorithm: recur downward from an order far above both n and x, where
the minimal solution is negligible, then normalise with the identity
``J_0(x) + 2 sum_k J_2k(x) = 1``. Downward recurrence is stable in both the
oscillatory (n < x) and the decaying (n > x) regime, so one path serves all
arguments. Tiny arguments use the leading terms of the power series.
"""
from __future__ import annotations

import math

import numpy as np

MAX_ORDER = 64
_SERIES_CUTOFF = 1e-3
_RESCALE_AT = 1e100


def _start_order(n: int, xmax: float) -> int:
    lim = max(n, xmax)
    m = int(lim + 40 + 4.0 * math.sqrt(lim) + 10.0 * lim ** (1.0 / 3.0))
    return m + (m % 2)


def _series(n: int, x: np.ndarray) -> np.ndarray:
    h2 = (x / 2.0) ** 2
    lead = (x / 2.0) ** n / math.factorial(n)
    return lead * (1.0 - h2 / (n + 1) + h2 * h2 / (2.0 * (n + 1) * (n + 2)))


def _miller(n: int, x: np.ndarray) -> np.ndarray:
    m = _start_order(n, float(x.max()))
    f_next = np.zeros_like(x)
    f = np.ones_like(x)
    total = 2.0 * f
    out = np.zeros_like(x)
    for order in range(m, 0, -1):
        f_prev = (2.0 * order / x) * f - f_next
        f_next, f = f, f_prev
        low = order - 1
        if low == n:
            out = f.copy()
        if low == 0:
            total = total + f
        elif low % 2 == 0:
            total = total + 2.0 * f
        big = np.abs(f) > _RESCALE_AT
        if big.any():
            s = np.where(big, 1.0 / _RESCALE_AT, 1.0)
            f, f_next, total, out = f * s, f_next * s, total * s, out * s
    return out / total


def bessel_jn(n: int, x):
    """J_n(x) for integer ``|n| <= 64``; accepts scalars or arrays."""
    n = int(n)
    if abs(n) > MAX_ORDER:
        raise ValueError(f"order {n} outside [-{MAX_ORDER}, {MAX_ORDER}]")
    xa = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xa)):
        raise ValueError("argument must be finite")
    # J_{-n} = (-1)^n J_n and J_n(-x) = (-1)^n J_n(x)
    sign = np.where(xa < 0, (-1.0) ** n, 1.0) * ((-1.0) ** n if n < 0 else 1.0)
    order = abs(n)
    ax = np.abs(xa).reshape(-1)
    result = np.empty_like(ax)
    small = ax < _SERIES_CUTOFF
    if small.any():
        result[small] = _series(order, ax[small])
    if (~small).any():
        result[~small] = _miller(order, ax[~small])
    result = result.reshape(xa.shape) * sign
    return float(result) if result.ndim == 0 else result
