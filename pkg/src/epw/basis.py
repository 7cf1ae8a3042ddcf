"""Spherical-wave basis of the Helmholtz solution space on the unit ball.

The basis functions are normalized products of spherical Bessel functions
and harmonics; their normalization constants grow superexponentially in the
degree, which is precisely the instability mechanism the evanescent sets
work around. Everything here is therefore carried in log space and exposed
both as scalars and as precomputed context tables.

Coefficient vectors are packed in the canonical flat order
k = ell^2 + ell + m, degree-major.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import specfun

__all__ = [
    "BasisContext",
    "beta",
    "beta_log",
    "alpha_approx",
    "alpha_approx_log",
    "tau_abs",
    "spherical_wave_eval",
    "herglotz_diag_forward",
    "herglotz_diag_inverse",
    "mode_order",
]

_FOUR_PI = 4.0 * math.pi


def beta_log_all(kappa: float, lmax: int) -> np.ndarray:
    """log of the basis normalization for degrees 0..lmax.

    The closed form is a three-term bilinear combination of neighboring
    spherical Bessel values at the wavenumber. Each bracket is evaluated
    relative to the largest of the three log magnitudes, so degrees far past
    kappa (where every j_l underflows) stay finite.
    """
    if kappa <= 0:
        raise ValueError("wavenumber must be positive")
    signs, logs = specfun.spherical_bessel_j_log(lmax + 1, kappa)
    # j_{-1}(r) = cos(r)/r joins the table for the ell = 0 bracket
    jm1 = math.cos(kappa) / kappa
    s = np.concatenate([[math.copysign(1.0, jm1)], signs])
    lg = np.concatenate([[math.log(abs(jm1)) if jm1 != 0 else -math.inf], logs])

    ells = np.arange(lmax + 1)
    l_lo, l_mid, l_hi = lg[ells], lg[ells + 1], lg[ells + 2]
    s_lo, s_mid, s_hi = s[ells], s[ells + 1], s[ells + 2]
    ref = np.maximum(np.maximum(l_lo, l_mid), l_hi)
    with np.errstate(under="ignore"):
        u_lo = s_lo * np.exp(l_lo - ref)
        u_mid = s_mid * np.exp(l_mid - ref)
        u_hi = s_hi * np.exp(l_hi - ref)
    bracket = (1.0 + ells / kappa**2) * u_mid**2 - (u_lo + u_mid / kappa) * u_hi
    if np.any(bracket <= 0):
        bad = int(np.argmax(bracket <= 0))
        raise ArithmeticError(f"normalization bracket lost positivity at ell={bad}")
    return -0.5 * np.log(bracket) - ref


def beta_log(ell: int, kappa: float) -> float:
    return float(beta_log_all(kappa, ell)[ell])


def beta(ell: int, kappa: float) -> float:
    """Normalization constant making the spherical waves unit-norm."""
    return math.exp(beta_log(ell, kappa))


def alpha_approx_log(ell: int, kappa: float) -> float:
    """log of the density-side normalization, production approximation.

    Derived from the closed-form bound on the weighted evanescence-parameter
    integral; relative accuracy is a few percent uniformly in the degree,
    which is all the sampling densities need. The exact integral is kept in
    the test suite as a small-degree oracle.
    """
    if kappa <= 0:
        raise ValueError("wavenumber must be positive")
    a = 2.0 * ell + 1.5
    log_gamma_upper = specfun.upper_incomplete_Q_log(a, 2.0 * kappa) + float(gammaln(a))
    inv_sq = (
        math.log(2.0)
        + 0.5 * math.log(math.pi)
        + 2.0 * kappa
        + float(gammaln(ell + 0.5))
        + log_gamma_upper
        - float(gammaln(ell + 1.0))
        - 2.0 * ell * math.log(kappa)
    )
    return -0.5 * inv_sq


def alpha_approx(ell: int, kappa: float) -> float:
    return math.exp(alpha_approx_log(ell, kappa))


def tau_abs(ell: int, kappa: float) -> float:
    """Modulus of the diagonal Herglotz multiplier 4 pi i^ell / (alpha beta).

    Uniformly bounded above and below in the degree; the phase is i^ell and
    is tracked separately as ell mod 4.
    """
    return math.exp(
        math.log(_FOUR_PI) - alpha_approx_log(ell, kappa) - beta_log(ell, kappa)
    )


@dataclass(frozen=True)
class BasisContext:
    """Precomputed per-degree tables for one wavenumber.

    Attributes
    ----------
    kappa : float
    Lmax : int
    log_beta : np.ndarray
        log of the spherical-wave normalization, degrees 0..Lmax.
    log_alpha : np.ndarray
        log of the density normalization (production approximation).
    tau_abs : np.ndarray
        Moduli of the diagonal Herglotz multipliers; phases are i^ell.
    """

    kappa: float
    Lmax: int
    log_beta: np.ndarray
    log_alpha: np.ndarray
    tau_abs: np.ndarray

    @classmethod
    def build(cls, kappa: float, Lmax: int) -> "BasisContext":
        log_beta = beta_log_all(kappa, Lmax)
        log_alpha = np.array([alpha_approx_log(l, kappa) for l in range(Lmax + 1)])
        tau = np.exp(math.log(_FOUR_PI) - log_alpha - log_beta)
        return cls(kappa=kappa, Lmax=Lmax, log_beta=log_beta, log_alpha=log_alpha, tau_abs=tau)


def mode_order(lmax: int) -> list[tuple[int, int]]:
    """Canonical (ell, m) packing order for flat coefficient vectors."""
    return [(l, m) for l in range(lmax + 1) for m in range(-l, l + 1)]


def spherical_wave_eval(
    ell: int, m: int, kappa: float, x: np.ndarray
) -> complex | np.ndarray:
    """Normalized spherical wave at points x (shape (..., 3)).

    The normalization and the Bessel factor are combined in log space first:
    for degrees well past kappa the two overflow and underflow individually
    while their product stays moderate.
    """
    specfun.ModeIndex(ell, m)
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 1
    pts = np.atleast_2d(x)
    r = np.linalg.norm(pts, axis=1)
    if np.any(r > 1.0 + 1e-9):
        raise ValueError("points must lie in the closed unit ball")
    log_b = beta_log(ell, kappa)

    out = np.zeros(len(pts), dtype=complex)
    for i, (ri, pt) in enumerate(zip(r, pts)):
        sgn, lg = specfun.spherical_bessel_j_log(ell, kappa * ri)
        radial = sgn[ell] * np.exp(log_b + lg[ell])
        if radial == 0.0:
            continue
        if ri == 0.0:
            theta1, theta2 = 0.0, 0.0
        else:
            theta1 = math.acos(min(1.0, max(-1.0, pt[2] / ri)))
            theta2 = math.atan2(pt[1], pt[0])
        out[i] = radial * specfun.spherical_harmonic(ell, m, theta1, theta2)
    return complex(out[0]) if scalar else out.reshape(x.shape[:-1])


def _tau_phases(lmax: int) -> np.ndarray:
    return np.array([1.0 + 0j, 1j, -1.0 + 0j, -1j])[np.arange(lmax + 1) % 4]


def herglotz_diag_forward(coeffs: np.ndarray, kappa: float) -> np.ndarray:
    """Apply the diagonal Herglotz transform in the canonical packing.

    coeffs has length (L+1)^2 for some L; entry k = ell^2 + ell + m is
    multiplied by tau_ell.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    lmax = int(round(math.sqrt(coeffs.size))) - 1
    if (lmax + 1) ** 2 != coeffs.size:
        raise ValueError("coefficient vector length must be a perfect square")
    ctx = BasisContext.build(kappa, lmax)
    tau = ctx.tau_abs * _tau_phases(lmax)
    degs = np.repeat(np.arange(lmax + 1), 2 * np.arange(lmax + 1) + 1)
    return coeffs * tau[degs]


def herglotz_diag_inverse(coeffs: np.ndarray, kappa: float) -> np.ndarray:
    """Inverse of the diagonal transform; exact up to rounding."""
    coeffs = np.asarray(coeffs, dtype=complex)
    lmax = int(round(math.sqrt(coeffs.size))) - 1
    if (lmax + 1) ** 2 != coeffs.size:
        raise ValueError("coefficient vector length must be a perfect square")
    ctx = BasisContext.build(kappa, lmax)
    tau = ctx.tau_abs * _tau_phases(lmax)
    degs = np.repeat(np.arange(lmax + 1), 2 * np.arange(lmax + 1) + 1)
    return coeffs / tau[degs]
