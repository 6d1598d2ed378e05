"""Closed-form spectral calculus of the weighted boundary flux Jacobian.

The incompressible Euler system in quasi-linear form has the boundary Jacobian

    A_n(u) = [[rho*v_n*I, n], [n^T, 0]]      (2D: a 3x3 symmetric matrix)

weighted by Theta = diag(1, 1, theta).  Everything here evaluates weighted
matrix functions |A_n|_Theta = Theta^-1 |Theta A_n Theta| Theta^-1 and the
negative part (A_n)^-_Theta in closed form, O(1) per quadrature point.  All
functions broadcast over numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "StateSample",
    "BoundaryPoint",
    "SpectralBundle",
    "lambda_pm",
    "alpha_beta",
    "abs_theta_bilinear",
    "neg_theta_bilinear",
    "an_bilinear",
    "theta_local",
    "Q_quadratic",
]


def _check_finite(*vals):
    for v in vals:
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite input to boundary operator")


@dataclass(frozen=True)
class StateSample:
    """Velocity/pressure sample u = (v, p) at a point."""

    v: np.ndarray  # shape (2,)
    p: float

    def __post_init__(self):
        _check_finite(self.v, self.p)


@dataclass(frozen=True)
class BoundaryPoint:
    """Geometry and weights at one boundary quadrature point."""

    n: np.ndarray  # unit outward normal, shape (2,)
    rho: float
    theta: float

    def __post_init__(self):
        _check_finite(self.n, self.rho, self.theta)
        if abs(float(np.hypot(self.n[0], self.n[1])) - 1.0) > 1e-12:
            raise ValueError("normal must be unit length")
        if self.rho <= 0.0 or self.theta <= 0.0:
            raise ValueError("rho and theta must be positive")

    @property
    def n_perp(self) -> np.ndarray:
        return np.array([-self.n[1], self.n[0]])


def lambda_pm(rho, v_n, theta):
    """Nonzero eigenvalues of Theta*A_n*Theta: (rho*v_n +- sqrt(4 theta^2 + rho^2 v_n^2))/2.

    The small-magnitude root is recovered from lambda_p*lambda_m = -theta^2 to
    avoid cancellation at large |rho v_n|/theta.
    """
    _check_finite(rho, v_n, theta)
    rv = np.asarray(rho * v_n, dtype=float)
    s = np.sqrt(4.0 * theta**2 + rv**2)
    big = 0.5 * (np.abs(rv) + s)
    lam_p = np.where(rv >= 0.0, big, theta**2 / big)
    lam_m = np.where(rv >= 0.0, -(theta**2) / big, -big)
    if lam_p.ndim == 0:
        return float(lam_p), float(lam_m)
    return lam_p, lam_m


def alpha_beta(rho, v_n, theta):
    """Wall/inflow penalty coefficients.

    alpha = (rho|v_n| - sqrt(4 theta^2 + rho^2 v_n^2))^2 / (4 sqrt(...)) > 0
    beta  = -lambda_m / sqrt(4 theta^2 + rho^2 v_n^2)  in (0, 1)
    """
    _check_finite(rho, v_n, theta)
    s = np.sqrt(4.0 * theta**2 + (rho * v_n) ** 2)
    # (rho|v_n| - s)^2 = (4 theta^2 / (rho|v_n| + s))^2, stable at large rho|v_n|
    alpha = (4.0 * theta**2 / (rho * np.abs(v_n) + s)) ** 2 / (4.0 * s)
    _, lam_m = lambda_pm(rho, v_n, theta)
    beta = -lam_m / s
    return alpha, beta


def _split_state(psi):
    if isinstance(psi, StateSample):
        return np.asarray(psi.v, dtype=float), float(psi.p)
    phi, chi = psi
    return np.asarray(phi, dtype=float), chi


def abs_theta_bilinear(point: BoundaryPoint, v_n, psi, psi2):
    """|A_n(u)|_Theta psi . psi' in closed form (symmetric, PSD on the diagonal)."""
    phi, chi = _split_state(psi)
    phi2, chi2 = _split_state(psi2)
    n = np.asarray(point.n, dtype=float)
    rho, theta = point.rho, point.theta
    s = np.sqrt(4.0 * theta**2 + (rho * v_n) ** 2)
    phin = phi @ n
    phin2 = phi2 @ n
    tang = (phi - phin * n) @ (phi2 - phin2 * n)
    return rho * np.abs(v_n) * tang + (
        chi * chi2
        + 2.0 * theta**2 * phin * phin2
        + (chi + rho * v_n * phin) * (chi2 + rho * v_n * phin2)
    ) / s


def neg_theta_bilinear(point: BoundaryPoint, v_n, psi, psi2):
    """(A_n(u))^-_Theta psi . psi' in closed form (symmetric, <= 0 on the diagonal)."""
    phi, chi = _split_state(psi)
    phi2, chi2 = _split_state(psi2)
    n = np.asarray(point.n, dtype=float)
    rho, theta = point.rho, point.theta
    s = np.sqrt(4.0 * theta**2 + (rho * v_n) ** 2)
    _, lam_m = lambda_pm(rho, v_n, theta)
    vn_minus = np.minimum(v_n, 0.0)
    phin = phi @ n
    phin2 = phi2 @ n
    tang = (phi - phin * n) @ (phi2 - phin2 * n)
    return rho * vn_minus * tang - (chi + lam_m * phin) * (chi2 + lam_m * phin2) / s


def an_bilinear(point: BoundaryPoint, v_n, psi, psi2):
    """Unweighted A_n(u) psi . psi' = rho v_n phi.phi' + chi phi'_n + phi_n chi'."""
    phi, chi = _split_state(psi)
    phi2, chi2 = _split_state(psi2)
    n = np.asarray(point.n, dtype=float)
    return point.rho * v_n * (phi @ phi2) + chi * (phi2 @ n) + (phi @ n) * chi2


def theta_local(rho, v_mag, mu, d_K, d_t, c_dt=0.1, c_St=4.0):
    """Balanced local weight theta on a cell.

    theta^2 = (rho|v|)^2 + c_dt^2 (rho d_K / d_t)^2 + c_St^2 (mu / d_K)^2

    d_t may be inf (stationary mode, the time term drops).  Degree-1
    homogeneous under the inviscid scaling (x,v,p,dK) -> (sx,sv,s^2 p,s dK).
    """
    d_K = np.asarray(d_K, dtype=float)
    if np.any(d_K <= 0.0):
        raise ValueError("cell diameter d_K must be positive")
    dt_inv = 0.0 if np.isinf(d_t) else 1.0 / d_t
    return np.sqrt(
        (rho * np.abs(v_mag)) ** 2
        + (c_dt * rho * d_K * dt_inv) ** 2
        + (c_St * mu / d_K) ** 2
    )


def Q_quadratic(rho, v_n, theta, p, delta):
    """Outflow energy-control quadratic Q(v, p, delta).

    Q = rho (v_n^+/2 + (1/2 - delta) v_n^-) v_n^2 + (delta rho v_n^- v_n + p) p / theta
    """
    vn_plus = np.maximum(v_n, 0.0)
    vn_minus = np.minimum(v_n, 0.0)
    return (
        rho * (0.5 * vn_plus + (0.5 - delta) * vn_minus) * v_n**2
        + (delta * rho * vn_minus * v_n + p) * p / theta
    )


@dataclass(frozen=True)
class SpectralBundle:
    """All scalar spectral quantities of the weighted Jacobian at a point."""

    lambda_p: float
    lambda_m: float
    alpha: float
    beta: float
    vn_minus: float
    vn_plus: float

    @classmethod
    def at(cls, rho, v_n, theta) -> "SpectralBundle":
        _check_finite(rho, v_n, theta)
        if theta <= 0.0 or rho <= 0.0:
            raise ValueError("rho and theta must be positive")
        lam_p, lam_m = lambda_pm(rho, v_n, theta)
        a, b = alpha_beta(rho, v_n, theta)
        return cls(
            lambda_p=float(lam_p),
            lambda_m=float(lam_m),
            alpha=float(a),
            beta=float(b),
            vn_minus=float(min(v_n, 0.0)),
            vn_plus=float(max(v_n, 0.0)),
        )
