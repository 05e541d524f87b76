"""N-th order steerable differential target patterns.

A pattern is the cosine series ``sum_n alpha_n cos(n (theta - theta_s))`` with
coefficients summing to one. Coefficients follow from the main-lobe direction
and N null offsets; the inverse map recovers offsets from coefficients.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import chebyshev

from .errors import CoefficientsNotNormalized, InvalidNulls, SingularConstraintMatrix

NORMALIZATION_TOL = 1e-10
CONDITION_LIMIT = 1e12
BRACKET_POINTS = 4096


@dataclass(frozen=True)
class IdealPattern:
    order_N: int
    coeffs: np.ndarray
    steer_theta_s: float
    null_offsets: tuple[float, ...]

    def __call__(self, theta):
        return evaluate_ideal(self, theta)

    @property
    def xi(self) -> float:
        """Mean squared magnitude of the pattern over the circle."""
        return float(self.coeffs @ cbar_diagonal(self.order_N) @ self.coeffs)


def cbar_diagonal(N: int) -> np.ndarray:
    """Gram matrix of the cosine basis over [0, 2 pi): diag(1, 1/2, ..., 1/2)."""
    if N < 0:
        raise ValueError("order must be non-negative")
    d = np.full(N + 1, 0.5)
    d[0] = 1.0
    return np.diag(d)


def cos_basis(theta, theta_s: float, N: int) -> np.ndarray:
    """``[1, cos(theta - theta_s), ..., cos(N (theta - theta_s))]``.

    A scalar angle gives shape (N+1,); an array of angles gives (len, N+1).
    """
    if N < 0:
        raise ValueError("order must be non-negative")
    phi = np.asarray(theta, dtype=float) - theta_s
    return np.cos(np.multiply.outer(phi, np.arange(N + 1)))


def validate_null_offsets(null_offsets: Sequence[float], N: int | None = None) -> tuple[float, ...]:
    offsets = tuple(sorted(float(o) for o in null_offsets))
    if N is not None and len(offsets) != N:
        raise InvalidNulls(f"order {N} needs exactly {N} null offsets, got {len(offsets)}")
    for o in offsets:
        if not (0.0 < o <= math.pi) or not math.isfinite(o):
            raise InvalidNulls(f"null offset {o} rad outside (0, pi]")
    for lo, hi in zip(offsets, offsets[1:]):
        if hi - lo <= 1e-12:
            raise InvalidNulls("coincident null offsets are not supported")
    return offsets


def solve_coefficients(steer: float, null_offsets: Sequence[float], N: int) -> IdealPattern:
    """Coefficients of the order-N pattern with unit gain at ``steer`` and the given nulls."""
    offsets = validate_null_offsets(null_offsets, N)
    n = np.arange(N + 1)
    # rows are the cosine basis at theta_s and theta_s + offset, written in offset form
    # so the result does not depend on the steering angle
    C = np.vstack([np.ones(N + 1)] + [np.cos(n * o) for o in offsets])
    if np.linalg.cond(C) > CONDITION_LIMIT:
        raise SingularConstraintMatrix("null offsets give a singular coefficient system")
    rhs = np.zeros(N + 1)
    rhs[0] = 1.0
    coeffs = np.linalg.solve(C, rhs)
    return IdealPattern(order_N=N, coeffs=coeffs, steer_theta_s=float(steer), null_offsets=offsets)


def evaluate_ideal(pattern: IdealPattern, theta):
    phi = np.asarray(theta, dtype=float) - pattern.steer_theta_s
    values = np.cos(np.multiply.outer(phi, np.arange(pattern.order_N + 1))) @ pattern.coeffs
    return float(values) if np.ndim(values) == 0 else values


def nulls_from_coefficients(coeffs: Sequence[float], N: int | None = None) -> list[float]:
    """Null offsets in (0, pi] of the pattern with the given cosine coefficients.

    With ``t = cos(phi)`` the pattern is the Chebyshev series ``sum a_n T_n(t)``.
    Sign changes are bracketed on a dense grid in t and each bracket is then
    bisected in phi, which keeps full angular precision near phi = pi.
    """
    a = np.asarray(coeffs, dtype=float)
    if N is None:
        N = a.size - 1
    if a.ndim != 1 or a.size != N + 1:
        raise ValueError(f"expected {N + 1} coefficients, got shape {a.shape}")
    if abs(a.sum() - 1.0) > NORMALIZATION_TOL:
        raise CoefficientsNotNormalized(f"coefficients sum to {a.sum():.12g}, not 1")
    if N == 0:
        return []

    def f(phi):
        return chebyshev.chebval(np.cos(phi), a)

    t = np.linspace(-1.0, 1.0, BRACKET_POINTS)
    vals = chebyshev.chebval(t, a)
    scale = np.abs(a).sum()
    roots = []
    if abs(vals[0]) <= 1e-13 * scale:
        roots.append(math.pi)
    for i in range(BRACKET_POINTS - 1):
        lo_v, hi_v = vals[i], vals[i + 1]
        if i > 0 and lo_v == 0.0:
            roots.append(math.acos(t[i]))
            continue
        if lo_v * hi_v >= 0.0 or (i == 0 and roots):
            continue
        # t increasing means phi decreasing
        p_lo, p_hi = math.acos(t[i + 1]), math.acos(t[i])
        f_lo = f(p_lo)
        for _ in range(200):
            mid = 0.5 * (p_lo + p_hi)
            if mid in (p_lo, p_hi):
                break
            f_mid = f(mid)
            if f_mid == 0.0:
                p_lo = p_hi = mid
                break
            if (f_mid > 0) == (f_lo > 0):
                p_lo, f_lo = mid, f_mid
            else:
                p_hi = mid
        phi = 0.5 * (p_lo + p_hi)
        if abs(f(phi)) <= 1e-12 * max(scale, 1.0):
            roots.append(phi)
    return sorted(roots)
