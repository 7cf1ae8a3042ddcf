"""Propagative and evanescent plane waves.

A propagative wave e^{i kappa d.x} has a real unit direction. The evanescent
family replaces d by a complex vector with d.d = 1 (unconjugated), built by
rotating the upward reference direction (i sqrt(z^2-1), 0, z); the wave then
oscillates along Re d and decays exponentially along Im d. The evanescence
parameter zeta >= 0 sets z = zeta/(2 kappa) + 1.

Modal (Fourier) coefficients of the waves against the normalized spherical
waves span hundreds of orders of magnitude across degrees, so every modal
routine works on log magnitudes and only exponentiates assembled ratios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import basis, specfun, wigner

__all__ = [
    "ParametricPoint",
    "ComplexDirection",
    "propagative_direction",
    "rotation_matrix",
    "evanescent_direction",
    "plane_wave_eval",
    "jacobi_anger_truncated",
    "modal_coeff_propagative",
    "modal_coeff_evanescent",
    "modal_norm",
]

_FOUR_PI = 4.0 * math.pi
_QUARTER_PHASE = np.array([1.0 + 0.0j, 1j, -1.0 + 0.0j, -1j])


@dataclass(frozen=True)
class ParametricPoint:
    """Evanescent-wave parameters: Euler angles plus evanescence zeta."""

    theta1: float
    theta2: float
    theta3: float
    zeta: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.theta1 <= math.pi:
            raise ValueError("theta1 must lie in [0, pi]")
        if not 0.0 <= self.theta2 < 2.0 * math.pi:
            raise ValueError("theta2 must lie in [0, 2 pi)")
        if not 0.0 <= self.theta3 < 2.0 * math.pi:
            raise ValueError("theta3 must lie in [0, 2 pi)")
        if self.zeta < 0.0:
            raise ValueError("zeta must be nonnegative")

    def as_array(self) -> np.ndarray:
        return np.array([self.theta1, self.theta2, self.theta3, self.zeta])


@dataclass(frozen=True)
class ComplexDirection:
    """Direction vector with d.d = 1; real for propagative waves."""

    vector: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.vector, dtype=complex)
        if v.shape != (3,):
            raise ValueError("direction must be a 3-vector")
        if abs(v @ v - 1.0) > 1e-12:
            raise ValueError("direction must satisfy d.d = 1 (unconjugated)")
        if abs(v.real @ v.imag) > 1e-12:
            raise ValueError("real and imaginary parts must be orthogonal")
        object.__setattr__(self, "vector", v)


def propagative_direction(theta1: float, theta2: float) -> np.ndarray:
    s = math.sin(theta1)
    return np.array([s * math.cos(theta2), s * math.sin(theta2), math.cos(theta1)])


def rotation_matrix(theta1: float, theta2: float, theta3: float) -> np.ndarray:
    """z-y-z rotation R_z(theta2) R_y(theta1) R_z(theta3)."""
    c1, s1 = math.cos(theta1), math.sin(theta1)
    c2, s2 = math.cos(theta2), math.sin(theta2)
    c3, s3 = math.cos(theta3), math.sin(theta3)
    return np.array(
        [
            [c1 * c2 * c3 - s2 * s3, -c1 * c2 * s3 - s2 * c3, s1 * c2],
            [c1 * s2 * c3 + c2 * s3, -c1 * s2 * s3 + c2 * c3, s1 * s2],
            [-s1 * c3, s1 * s3, c1],
        ]
    )


def evanescent_direction(y: ParametricPoint, kappa: float) -> ComplexDirection:
    """Rotated upward direction; zeta = 0 degenerates to the propagative one."""
    if kappa <= 0:
        raise ValueError("wavenumber must be positive")
    z = y.zeta / (2.0 * kappa) + 1.0
    R = rotation_matrix(y.theta1, y.theta2, y.theta3)
    vec = z * R[:, 2] + 1j * math.sqrt(max(z * z - 1.0, 0.0)) * R[:, 0]
    return ComplexDirection(vector=vec)


def plane_wave_eval(direction, kappa: float, x: np.ndarray):
    """e^{i kappa d.x}; direction may be real, complex, or a ComplexDirection."""
    if isinstance(direction, ComplexDirection):
        d = direction.vector
    else:
        d = np.asarray(direction)
    x = np.asarray(x, dtype=float)
    phase = 1j * kappa * (x @ d)
    return np.exp(phase)


def _upward_harmonic_logs(ell: int, z: float) -> np.ndarray:
    """log of gamma_l^m P_l^m(z) for m = 0..ell; values on z >= 1 are >= 0."""
    return np.array(
        [
            specfun.gamma_norm_log(ell, m) + specfun.assoc_legendre_P_log(ell, m, z)
            for m in range(ell + 1)
        ]
    )


def _harmonic_rows(L: int, theta1: float, theta2: float) -> list[np.ndarray]:
    """Y_l^m(theta1, theta2) for all l <= L, one array per degree (m = -l..l).

    A single normalized-Ferrers table serves every degree; rebuilding it per
    (l, m) would make degree-L sums quartic in L.
    """
    table = specfun.norm_ferrers_table(L, math.cos(theta1))
    rows = []
    for ell in range(L + 1):
        m = np.arange(-ell, ell + 1)
        vals = table[ell, np.abs(m)] * np.exp(1j * m * theta2)
        vals[(m < 0) & (np.abs(m) % 2 == 1)] *= -1.0
        rows.append(vals)
    return rows


def jacobi_anger_truncated(source, kappa: float, x: np.ndarray, L: int) -> complex:
    """Partial Jacobi-Anger sum up to degree L at a point inside the ball.

    Real directions use the classical expansion (conjugated harmonic at the
    direction); parametric points use the extension whose direction-side
    harmonic is evaluated at the upward complex argument, unconjugated, with
    the rotation moved onto the space argument.
    """
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x))
    if r >= 1.0:
        raise ValueError("truncated series is certified only inside the unit ball")
    if r == 0.0:
        xhat = np.array([0.0, 0.0, 1.0])
    else:
        xhat = x / r
    sgn, logj = specfun.spherical_bessel_j_log(L, kappa * r)

    if isinstance(source, ParametricPoint):
        z = source.zeta / (2.0 * kappa) + 1.0
        R = rotation_matrix(source.theta1, source.theta2, source.theta3)
        arg = R.T @ xhat
        t1 = math.acos(min(1.0, max(-1.0, arg[2])))
        t2 = math.atan2(arg[1], arg[0])
        space_rows = _harmonic_rows(L, t1, t2)
        total = 0.0 + 0.0j
        for ell in range(L + 1):
            if not math.isfinite(logj[ell]):
                continue
            dir_logs = _upward_harmonic_logs(ell, z)
            ref = float(np.max(dir_logs)) + logj[ell]
            m = np.arange(-ell, ell + 1)
            # gamma_l^{-m} P_l^{-m}(z) = gamma_l^m P_l^m(z) on the ray
            mags = np.exp(dir_logs[np.abs(m)] + logj[ell] - ref)
            phases = _QUARTER_PHASE[(-m) % 4]
            inner = np.sum(mags * phases * space_rows[ell])
            total += _QUARTER_PHASE[ell % 4] * sgn[ell] * math.exp(ref) * inner
        return complex(_FOUR_PI * total)

    d = np.asarray(source, dtype=float)
    t1d = math.acos(min(1.0, max(-1.0, d[2] / np.linalg.norm(d))))
    t2d = math.atan2(d[1], d[0])
    t1x = math.acos(min(1.0, max(-1.0, xhat[2])))
    t2x = math.atan2(xhat[1], xhat[0])
    dir_rows = _harmonic_rows(L, t1d, t2d)
    space_rows = _harmonic_rows(L, t1x, t2x)
    total = 0.0 + 0.0j
    for ell in range(L + 1):
        if not math.isfinite(logj[ell]):
            continue
        radial = sgn[ell] * math.exp(logj[ell])
        inner = np.sum(np.conj(dir_rows[ell]) * space_rows[ell])
        total += _QUARTER_PHASE[ell % 4] * radial * inner
    return complex(_FOUR_PI * total)


def superposition_eval(
    coeffs: np.ndarray, kappa: float, x: np.ndarray, L: int
) -> complex | np.ndarray:
    """Sum of coeffs[k] b_l^m(x) over the canonical packing k = l^2 + l + m.

    Evaluating mode by mode rebuilds the Legendre table per (l, m); this
    shares one table per point across all (L+1)^2 modes.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.shape != ((L + 1) ** 2,):
        raise ValueError("coefficient vector must cover exactly the modes l <= L")
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 1
    pts = np.atleast_2d(x)
    log_beta = basis.beta_log_all(kappa, L)
    out = np.empty(len(pts), dtype=complex)
    for i, pt in enumerate(pts):
        r = float(np.linalg.norm(pt))
        sgn, lg = specfun.spherical_bessel_j_log(L, kappa * r)
        if r == 0.0:
            theta1 = theta2 = 0.0
        else:
            theta1 = math.acos(min(1.0, max(-1.0, pt[2] / r)))
            theta2 = math.atan2(pt[1], pt[0])
        rows = _harmonic_rows(L, theta1, theta2)
        radial = sgn * np.exp(log_beta + lg)
        acc = 0.0 + 0.0j
        for ell in range(L + 1):
            if radial[ell] == 0.0:
                continue
            seg = coeffs[ell * ell : ell * ell + 2 * ell + 1]
            acc += radial[ell] * (seg @ rows[ell])
        out[i] = acc
    return complex(out[0]) if scalar else out


def modal_coeff_propagative(
    ell: int, m: int, theta1: float, kappa: float, scale: float = 1.0
) -> float:
    """Coefficient modulus of a propagative wave against the (ell, m) mode."""
    specfun.ModeIndex(ell, m)
    P = specfun.ferrers_P(ell, abs(m), math.cos(theta1))
    if P == 0.0:
        return 0.0
    log_mag = (
        math.log(_FOUR_PI)
        - basis.beta_log(ell, kappa)
        + specfun.gamma_norm_log(ell, abs(m))
        + math.log(abs(P))
    )
    return scale * math.exp(log_mag)


def modal_coeff_evanescent(
    ell: int, m: int, y: ParametricPoint, kappa: float, scale: float = 1.0
) -> float:
    """Coefficient modulus of an evanescent wave against the (ell, m) mode.

    The m' sum mixes Wigner entries with ray Legendre values spanning huge
    ranges; the largest log magnitude is factored out before summation.
    """
    specfun.ModeIndex(ell, m)
    z = y.zeta / (2.0 * kappa) + 1.0
    d_block = wigner.wigner_d(ell, y.theta1).matrix
    dir_logs = _upward_harmonic_logs(ell, z)
    ref = float(np.max(dir_logs))
    acc = 0.0 + 0.0j
    for mp in range(-ell, ell + 1):
        amp = abs(mp)
        w = d_block[mp + ell, m + ell]
        if w == 0.0:
            continue
        mag = math.exp(dir_logs[amp] - ref) * w
        acc += mag * _QUARTER_PHASE[(-mp) % 4] * np.exp(-1j * mp * y.theta3)
    mod = abs(acc)
    if mod == 0.0:
        return 0.0
    return scale * math.exp(
        math.log(_FOUR_PI) - basis.beta_log(ell, kappa) + ref + math.log(mod)
    )


def modal_norm(ell: int, zeta: float, kappa: float, scale: float = 1.0) -> float:
    """l2 norm over m of the evanescent modal coefficients; angle-free."""
    if zeta < 0:
        raise ValueError("zeta must be nonnegative")
    z = zeta / (2.0 * kappa) + 1.0
    logs = _upward_harmonic_logs(ell, z)
    ref = float(np.max(logs))
    vals = np.exp(logs - ref)
    norm_sq = vals[0] ** 2 + 2.0 * float(np.sum(vals[1:] ** 2))
    return scale * math.exp(
        math.log(_FOUR_PI) - basis.beta_log(ell, kappa) + ref + 0.5 * math.log(norm_sq)
    )
