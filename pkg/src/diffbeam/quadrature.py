"""Brute-force quadrature references for the closed-form metrics.

Every integrand here is a trigonometric polynomial times ``exp(j z cos theta)``,
so the periodic trapezoid rule converges spectrally. These routines exist to
check the closed forms and are not used by the design path.
"""
from __future__ import annotations

import numpy as np

from .array import ArrayGeometry, steering_matrix
from .metrics import MSE_FLOOR, db10
from .pattern import IdealPattern, cos_basis

NODES = 2 ** 14


def _nodes(n: int = NODES) -> np.ndarray:
    return 2.0 * np.pi * np.arange(n) / n


def gamma_matrix_oracle(geom: ArrayGeometry, k: float, nodes: int = NODES) -> np.ndarray:
    theta = _nodes(nodes)
    d = steering_matrix(geom, k, theta)
    return ((d @ d.conj().T) / nodes).real


def q_coupling_oracle(geom: ArrayGeometry, k: float, theta_s: float, N: int,
                      nodes: int = NODES) -> np.ndarray:
    theta = _nodes(nodes)
    d = steering_matrix(geom, k, theta)
    return d @ cos_basis(theta, theta_s, N) / nodes


def cbar_oracle(N: int, theta_s: float = 0.0, nodes: int = NODES) -> np.ndarray:
    c = cos_basis(_nodes(nodes), theta_s, N)
    return c.T @ c / nodes


def mse_direct(h, geom: ArrayGeometry, k: float, pattern: IdealPattern,
               nodes: int = NODES, db: bool = True) -> float:
    theta = _nodes(nodes)
    response = np.asarray(h, dtype=complex).conj() @ steering_matrix(geom, k, theta)
    eps = float(np.mean(np.abs(response - pattern(theta)) ** 2))
    return float(db10(max(eps, MSE_FLOOR))) if db else eps
