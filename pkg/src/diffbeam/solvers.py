"""Null-constrained beamformer solvers.

The constraint system stacks the distortionless row and one row per null at
``theta_s +/- offset``. Three filters come out of it:

* NC: the exact solve when the system is square, else the minimum-norm solve;
* mWNG: the minimum-norm (maximum white noise gain) feasible filter;
* INC: minimises the MSE to the target pattern over the feasible set,
  intersected with a ball ``||h||^2 <= ||h_mWNG||^2 10^(v/10)``.

For INC, writing ``h = h_mWNG + B z`` with B an orthonormal basis of the null
space of D turns the problem into a trust-region subproblem in z, because
h_mWNG is orthogonal to range(B).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .array import ArrayGeometry, steering_vector
from .errors import InfeasibleSlack, RankDeficient, TooFewMicrophones, TrustRegionHardCase
from .pattern import validate_null_offsets

CONDITION_LIMIT = 1e12
PI_MERGE_TOL = 1e-12


class Method(str, Enum):
    NC = "NC"
    MWNG = "mWNG"
    INC = "INC"


@dataclass(frozen=True)
class ConstraintSystem:
    matrix_D: np.ndarray
    rhs_gamma: np.ndarray
    merged_opposite_null: bool
    wavenumber: float
    theta_s: float
    constraint_angles: tuple[float, ...]
    frequency_hz: Optional[float] = None

    @property
    def R(self) -> int:
        return self.matrix_D.shape[0]

    @property
    def M(self) -> int:
        return self.matrix_D.shape[1]

    def residual(self, h: np.ndarray) -> float:
        return float(np.max(np.abs(self.matrix_D @ h - self.rhs_gamma)))


@dataclass(frozen=True)
class TrustRegionCertificate:
    """KKT evidence for ``min z^H A z - 2 Re(z^H b)`` s.t. ``||z||^2 <= radius``."""
    lam: float
    z_norm_sq: float
    radius: float
    stationarity: float
    hard_case: bool = False

    @property
    def valid(self) -> bool:
        if self.lam <= 1e-12 and self.z_norm_sq <= self.radius * (1.0 + 1e-10):
            return True
        return abs(self.z_norm_sq - self.radius) <= 1e-8 * self.radius


@dataclass(frozen=True)
class BeamformerFilter:
    weights: np.ndarray
    frequency_hz: Optional[float]
    method: Method
    achieved_wng_db: float
    constraint_residual: float
    zeta_wng_db: Optional[float] = None
    mse_db: Optional[float] = None
    certificate: Optional[TrustRegionCertificate] = field(default=None, compare=False)

    def to_json_dict(self) -> dict:
        return {
            "frequency_hz": self.frequency_hz,
            "method": self.method.value,
            "zeta_wng_db": self.zeta_wng_db,
            "weights": [{"re": float(w.real), "im": float(w.imag)} for w in self.weights],
            "achieved_wng_db": self.achieved_wng_db,
            "mse_db": self.mse_db,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "BeamformerFilter":
        weights = np.array([complex(w["re"], w["im"]) for w in doc["weights"]])
        return cls(
            weights=weights,
            frequency_hz=doc.get("frequency_hz"),
            method=Method(doc["method"]),
            achieved_wng_db=doc.get("achieved_wng_db"),
            constraint_residual=float("nan"),
            zeta_wng_db=doc.get("zeta_wng_db"),
            mse_db=doc.get("mse_db"),
        )


def build_constraints(geom: ArrayGeometry, k: float, theta_s: float, null_offsets: Sequence[float],
                      *, frequency_hz: Optional[float] = None) -> ConstraintSystem:
    offsets = validate_null_offsets(null_offsets)
    angles = [theta_s]
    merged = False
    for o in offsets:
        if abs(o - math.pi) <= PI_MERGE_TOL:
            # theta_s + pi and theta_s - pi are the same direction
            angles.append(theta_s + math.pi)
            merged = True
        else:
            angles.extend([theta_s + o, theta_s - o])
    R = len(angles)
    if geom.M < R:
        raise TooFewMicrophones(f"{R} constraints need at least {R} microphones, array has {geom.M}")
    D = np.vstack([steering_vector(geom, k, t).conj() for t in angles])
    cond = np.linalg.cond(D)
    if not cond <= CONDITION_LIMIT:
        raise RankDeficient(f"constraint matrix condition number {cond:.3g} exceeds {CONDITION_LIMIT:g}")
    rhs = np.zeros(R)
    rhs[0] = 1.0
    return ConstraintSystem(D, rhs, merged, float(k), float(theta_s), tuple(angles), frequency_hz)


@dataclass(frozen=True)
class _Factorization:
    range_basis: np.ndarray   # Q1, M x R
    triangular: np.ndarray    # R1, R x R, D[piv] = R1^H Q1^H
    pivots: np.ndarray
    null_basis: np.ndarray    # Q2, M x (M - R)


def _factor(cs: ConstraintSystem) -> _Factorization:
    D = cs.matrix_D
    R = cs.R
    if R > cs.M:
        raise RankDeficient("more constraints than microphones")
    Q, T, piv = scipy.linalg.qr(D.conj().T, mode="full", pivoting=True)
    diag = np.abs(np.diag(T[:R, :R]))
    if diag.size == 0 or diag[-1] <= diag[0] / CONDITION_LIMIT:
        raise RankDeficient("constraint matrix does not have full row rank")
    return _Factorization(Q[:, :R], T[:R, :R], piv, Q[:, R:])


def nullspace_basis(cs: ConstraintSystem) -> np.ndarray:
    """Orthonormal basis of the null space of D, shape (M, M - R)."""
    return _factor(cs).null_basis


def _min_norm(cs: ConstraintSystem, fac: _Factorization) -> np.ndarray:
    y = scipy.linalg.solve_triangular(fac.triangular, cs.rhs_gamma[fac.pivots].astype(complex),
                                      trans="C", lower=False)
    return fac.range_basis @ y


def _wng_db(cs: ConstraintSystem, h: np.ndarray) -> float:
    return float(10.0 * np.log10(abs(cs.matrix_D[0] @ h) ** 2 / np.vdot(h, h).real))


def _make_filter(cs: ConstraintSystem, h: np.ndarray, method: Method, **extra) -> BeamformerFilter:
    return BeamformerFilter(weights=h, frequency_hz=cs.frequency_hz, method=method,
                            achieved_wng_db=_wng_db(cs, h), constraint_residual=cs.residual(h), **extra)


def solve_mwng(cs: ConstraintSystem) -> BeamformerFilter:
    """Minimum-norm filter ``D^H (D D^H)^-1 gamma``, computed from a QR factorisation of D^H."""
    h = _min_norm(cs, _factor(cs))
    return _make_filter(cs, h, Method.MWNG)


def solve_nc(cs: ConstraintSystem) -> BeamformerFilter:
    if cs.M == cs.R:
        if np.linalg.cond(cs.matrix_D) > CONDITION_LIMIT:
            raise RankDeficient("square constraint matrix is singular")
        h = np.linalg.solve(cs.matrix_D, cs.rhs_gamma.astype(complex))
        return _make_filter(cs, h, Method.NC)
    return replace(solve_mwng(cs), method=Method.NC)


def wmax(cs: ConstraintSystem) -> float:
    """Largest white noise gain (dB) of any filter meeting the constraints."""
    h = solve_mwng(cs).weights
    return float(-10.0 * np.log10(np.vdot(h, h).real))


def solve_trust_region(A: np.ndarray, b: np.ndarray, radius: float,
                       tol: float = 1e-10, max_iter: int = 200) -> tuple[np.ndarray, TrustRegionCertificate]:
    """Minimise ``z^H A z - 2 Re(z^H b)`` subject to ``||z||^2 <= radius``.

    A is Hermitian. The multiplier lam >= 0 solving ``(A + lam I) z = b`` is
    found by safeguarded Newton iteration on ``1/||z(lam)|| - 1/sqrt(radius)``
    in the eigenbasis of A.
    """
    n = A.shape[0]
    if radius < 0:
        raise ValueError("radius must be non-negative")
    if n == 0:
        return np.zeros(0, dtype=complex), TrustRegionCertificate(0.0, 0.0, radius, 0.0)
    if radius == 0.0:
        z = np.zeros(n, dtype=complex)
        return z, TrustRegionCertificate(math.inf, 0.0, 0.0, 0.0)

    w, V = np.linalg.eigh(A)
    beta = V.conj().T @ b
    beta2 = np.abs(beta) ** 2
    delta = math.sqrt(radius)
    bnorm = float(np.sqrt(beta2.sum()))
    hard = False

    def norm_sq(lam):
        return float(np.sum(beta2 / (w + lam) ** 2))

    shift = max(0.0, -float(w[0]))
    if w[0] > 0.0 and norm_sq(0.0) <= radius:
        lam = 0.0
        y = beta / w
    else:
        minimal = w <= w[0] + 1e-12 * max(abs(w[-1]), 1e-300)
        rest = ~minimal
        if beta2[minimal].sum() <= (1e-12 * max(bnorm, 1e-300)) ** 2:
            y_rest = np.zeros(n, dtype=complex)
            y_rest[rest] = beta[rest] / (w[rest] + shift)
            rest_sq = float(np.sum(np.abs(y_rest) ** 2))
            if rest_sq <= radius:
                hard = True
                lam = shift
                y = y_rest
                if shift > 0.0:
                    # nonconvex: move along the minimal eigenvector onto the boundary
                    y[np.argmax(minimal)] = math.sqrt(radius - rest_sq)
        if not hard:
            lo = shift
            hi = bnorm / delta + max(abs(w[0]), abs(w[-1])) + shift
            lam = hi
            for _ in range(max_iter):
                d = w + lam
                s = float(np.sum(beta2 / d ** 2))
                if abs(s - radius) <= tol * radius:
                    break
                phi = 1.0 / math.sqrt(s) - 1.0 / delta
                if phi < 0.0:
                    lo = lam
                else:
                    hi = lam
                dphi = s ** -1.5 * float(np.sum(beta2 / d ** 3))
                step = lam - phi / dphi if dphi > 0 else math.nan
                lam = step if lo < step < hi else 0.5 * (lo + hi)
            y = beta / (w + lam)
    z = V @ y
    stat = float(np.linalg.norm(A @ z + lam * z - b)) if math.isfinite(lam) else 0.0
    cert = TrustRegionCertificate(float(lam), float(np.vdot(z, z).real), float(radius), stat, hard)
    if not cert.valid:
        raise TrustRegionHardCase(f"trust-region solve failed to certify (lam={lam:.3g})")
    return z, cert


def solve_inc(cs: ConstraintSystem, gamma: np.ndarray, q: np.ndarray, v_slack_db: float) -> BeamformerFilter:
    """Minimise ``h^H Gamma h - 2 Re(h^H q)`` with ``D h = gamma`` and WNG >= W_max - v."""
    if not v_slack_db >= 0.0:
        raise InfeasibleSlack(f"WNG slack must be non-negative, got {v_slack_db}")
    fac = _factor(cs)
    h0 = _min_norm(cs, fac)
    norm0 = float(np.vdot(h0, h0).real)
    zeta = -10.0 * math.log10(norm0) - v_slack_db
    B = fac.null_basis
    if B.shape[1] == 0:
        nc = solve_nc(cs)
        cert = TrustRegionCertificate(0.0, 0.0, 0.0, 0.0)
        return replace(nc, method=Method.INC, zeta_wng_db=zeta, certificate=cert)

    radius = norm0 * math.expm1(v_slack_db * math.log(10.0) / 10.0)
    A = B.conj().T @ gamma @ B
    A = 0.5 * (A + A.conj().T)
    dim = A.shape[0]
    A += (1e-12 * np.trace(A).real / dim) * np.eye(dim)
    b = B.conj().T @ (q - gamma @ h0)
    z, cert = solve_trust_region(A, b, radius)
    h = h0 + B @ z
    return _make_filter(cs, h, Method.INC, zeta_wng_db=zeta, certificate=cert)


def inc_objective(h: np.ndarray, gamma: np.ndarray, q: np.ndarray) -> float:
    return float((np.vdot(h, gamma @ h) - 2.0 * np.vdot(h, q).real).real)
