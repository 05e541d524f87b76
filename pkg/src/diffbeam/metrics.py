"""Beamformer performance measures and the closed-form matrices behind them.

The diffuse-noise coherence matrix, the pattern coupling matrix and the
cosine-basis Gram matrix are evaluated in closed (Bessel-series) form; the
numerical-quadrature references live in :mod:`diffbeam.quadrature`.
"""
from __future__ import annotations

import numpy as np

from .array import ArrayGeometry, steering_matrix, steering_vector
from .bessel import bessel_jn
from .errors import DegenerateDenominator, DimensionMismatch, ZeroFilter
from .pattern import IdealPattern, cbar_diagonal

MSE_FLOOR = 1e-300


def db10(x):
    return 10.0 * np.log10(x)


def gamma_matrix(geom: ArrayGeometry, k: float) -> np.ndarray:
    """Pseudo-coherence matrix of a cylindrically isotropic noise field (real, M x M)."""
    if k < 0:
        raise ValueError("wavenumber must be non-negative")
    x, a = geom.positions, geom.directivities
    arg = k * (x[:, None] - x[None, :])
    am, an = a[:, None], a[None, :]
    j0 = bessel_jn(0, arg)
    j2 = bessel_jn(2, arg)
    gamma = 0.5 * (1.0 - (am + an) + 3.0 * am * an) * j0 + 0.5 * (1.0 - am) * (1.0 - an) * j2
    return 0.5 * (gamma + gamma.T)


def q_coupling_matrix(geom: ArrayGeometry, k: float, theta_s: float, N: int) -> np.ndarray:
    """Projection of the steering vectors onto the cosine basis, complex M x (N+1).

    Column n holds ``j^n J_n(k x_m) a_m cos(n theta_s)
    - (1 - a_m)/2 sin(n theta_s) [j^(n+1) J_(n+1)(k x_m) - j^(n-1) J_(n-1)(k x_m)]``.
    """
    if k < 0:
        raise ValueError("wavenumber must be non-negative")
    if N < 0:
        raise ValueError("order must be non-negative")
    x, a = geom.positions, geom.directivities
    kx = k * x
    # J_{-1} included: bessel_jn handles negative orders
    J = {n: bessel_jn(n, kx) for n in range(-1, N + 2)}
    Q = np.empty((geom.M, N + 1), dtype=complex)
    for n in range(N + 1):
        Q[:, n] = (1j ** n) * J[n] * a * np.cos(n * theta_s) - 0.5 * (1.0 - a) * np.sin(n * theta_s) * (
            (1j ** (n + 1)) * J[n + 1] - (1j ** (n - 1)) * J[n - 1]
        )
    return Q


def cbar_matrix(N: int) -> np.ndarray:
    return cbar_diagonal(N)


def _check_filter(h, geom: ArrayGeometry) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    if h.shape != (geom.M,):
        raise DimensionMismatch(f"filter has shape {h.shape}, array has {geom.M} microphones")
    return h


def beampattern(h, geom: ArrayGeometry, k: float, theta):
    """``h^H d(k, theta)``; an array of angles gives an array of responses."""
    h = _check_filter(h, geom)
    if np.ndim(theta) == 0:
        return complex(np.vdot(h, steering_vector(geom, k, float(theta))))
    theta = np.asarray(theta, dtype=float)
    return (h.conj() @ steering_matrix(geom, k, theta.ravel())).reshape(theta.shape)


def white_noise_gain(h, geom: ArrayGeometry, k: float, theta_s: float, db: bool = True) -> float:
    h = _check_filter(h, geom)
    norm2 = float(np.vdot(h, h).real)
    if norm2 == 0.0:
        raise ZeroFilter("white noise gain of the zero filter is undefined")
    wng = abs(np.vdot(h, steering_vector(geom, k, theta_s))) ** 2 / norm2
    return float(db10(wng)) if db else wng


def directivity_factor(h, geom: ArrayGeometry, k: float, theta_s: float,
                       gamma: np.ndarray | None = None, db: bool = True) -> float:
    h = _check_filter(h, geom)
    if gamma is None:
        gamma = gamma_matrix(geom, k)
    denom = float(np.vdot(h, gamma @ h).real)
    if not denom > 0.0:
        raise DegenerateDenominator("h^H Gamma h is not positive")
    df = abs(np.vdot(h, steering_vector(geom, k, theta_s))) ** 2 / denom
    return float(db10(df)) if db else df


def ideal_directivity_factor(pattern: IdealPattern, db: bool = True) -> float:
    """Directivity of the target pattern itself, ``1 / (a^T Cbar a)``."""
    df = 1.0 / pattern.xi
    return float(db10(df)) if db else df


def mse_quadratic(h, geom: ArrayGeometry, k: float, pattern: IdealPattern,
                  gamma: np.ndarray | None = None, q: np.ndarray | None = None,
                  db: bool = True) -> float:
    """Mean squared deviation from the target pattern via its quadratic form.

    ``gamma`` and ``q`` may be passed in when already computed for this frequency.
    """
    h = _check_filter(h, geom)
    if gamma is None:
        gamma = gamma_matrix(geom, k)
    if q is None:
        q = q_coupling_matrix(geom, k, pattern.steer_theta_s, pattern.order_N) @ pattern.coeffs
    cross = np.vdot(h, q)
    eps = float((np.vdot(h, gamma @ h) - 2.0 * cross.real).real + pattern.xi)
    if not db:
        return eps
    return float(db10(max(eps, MSE_FLOOR)))
