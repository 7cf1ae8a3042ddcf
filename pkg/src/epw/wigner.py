"""Rotation matrices for spherical harmonics (z-y-z convention).

The middle-angle block d_ell(theta) is synthesized as a Fourier series whose
coefficients come from diagonalizing the angular momentum operator J_y in
the J_z eigenbasis. Every Fourier coefficient has modulus at most one, so
the synthesis is free of the alternating-sum cancellation that makes the
closed-form expression unusable past moderate degrees.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal

__all__ = ["WignerBlock", "wigner_d", "wigner_D", "wigner_orthogonality_check"]

_IM_RESIDUE_TOL = 1e-12


@dataclass(frozen=True)
class WignerBlock:
    """One real middle-rotation block d_ell(theta).

    Attributes
    ----------
    ell : int
        Degree; the block is (2*ell+1) x (2*ell+1).
    theta : float
        Rotation angle about the intermediate y-axis.
    matrix : np.ndarray
        Real orthogonal block, rows indexed by m, columns by m', both
        running -ell..ell.
    """

    ell: int
    theta: float
    matrix: np.ndarray


@lru_cache(maxsize=512)
def _jy_eigen(ell: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending, exactly -ell..ell) and eigenvectors of J_y.

    J_y is Hermitian tridiagonal with purely imaginary off-diagonals; the
    diagonal phase change m -> i^m turns it into a real symmetric tridiagonal
    matrix, handled by the implicit-shift QL/QR solver.
    """
    n = 2 * ell + 1
    i = np.arange(n - 1)
    off = -np.sqrt((i + 1.0) * (2.0 * ell - i)) / 2.0
    mu, vec = eigh_tridiagonal(np.zeros(n), off)
    order = np.argsort(mu)
    return np.arange(-ell, ell + 1, dtype=float), np.ascontiguousarray(vec[:, order])


@lru_cache(maxsize=4096)
def _d_block_cached(ell: int, theta: float) -> np.ndarray:
    # keyed on the exact float bit pattern of theta
    mu, vec = _jy_eigen(ell)
    phases = np.exp(1j * mu * theta)
    core = (vec * phases) @ vec.T
    m = np.arange(-ell, ell + 1)
    # the basis phase i^(m - m') moves J_y eigenvectors back from the real frame
    quarter = np.array([1.0 + 0j, 1j, -1.0 + 0j, -1j])
    block = quarter[np.subtract.outer(m, m) % 4] * core
    imax = float(np.max(np.abs(block.imag))) if ell > 0 else 0.0
    if imax >= _IM_RESIDUE_TOL:
        raise ArithmeticError(
            f"Fourier synthesis of d_{ell}({theta}) left imaginary residue {imax:.3e}"
        )
    out = np.ascontiguousarray(block.real)
    out.setflags(write=False)
    return out


def wigner_d(ell: int, theta: float) -> WignerBlock:
    """Middle-rotation block d_ell(theta) by Fourier synthesis.

    Raises ArithmeticError if the synthesis leaves an imaginary residue of
    1e-12 or more, which would indicate a broken eigendecomposition.
    """
    if ell < 0:
        raise ValueError("degree must be nonnegative")
    return WignerBlock(ell=ell, theta=float(theta), matrix=_d_block_cached(ell, float(theta)))


def wigner_D(ell: int, theta1: float, theta2: float, theta3: float) -> np.ndarray:
    """Full rotation block D_ell, entry (m, m') = e^(i m' t2) d^(m,m')(t1) e^(i m t3)."""
    d = wigner_d(ell, theta1).matrix
    m = np.arange(-ell, ell + 1)
    return np.exp(1j * m * theta3)[:, None] * d * np.exp(1j * m * theta2)[None, :]


def wigner_orthogonality_check(ell: int, q: int, grid_density: int = 32) -> float:
    """Max deviation of the numeric Euler-angle inner products from theory.

    Integrates D_ell^(m',m) * conj(D_q^(n',n)) sin(theta1) over the full
    Euler-angle box on a tensor grid (Gauss-Legendre in cos(theta1), uniform
    in the two periodic angles) and compares against the orthogonality value
    8 pi^2 / (2 ell + 1) on matching indices, 0 elsewhere. Intended as a test
    utility for degrees up to ~20.
    """
    if max(ell, q) > 20:
        raise ValueError("orthogonality check is a test utility, keep degrees <= 20")
    n1 = max(grid_density, ell + q + 2)
    t, w = np.polynomial.legendre.leggauss(n1)
    theta1 = np.arccos(t)

    d_ell = np.stack([wigner_d(ell, th).matrix for th in theta1])  # (n1, 2l+1, 2l+1)
    d_q = np.stack([wigner_d(q, th).matrix for th in theta1])
    # theta1 part of the integral, all index pairs at once
    core = np.einsum("t,tab,tcd->abcd", w, d_ell, d_q)

    # uniform Riemann sums over the periodic angles are exact up to aliasing;
    # evaluate them in closed form on the same grid the tensor rule would use
    n23 = 2 * (ell + q) + 3
    grid = 2.0 * np.pi * np.arange(n23) / n23
    mell = np.arange(-ell, ell + 1)
    mq = np.arange(-q, q + 1)

    def _angle_factor(freq_a: np.ndarray, freq_b: np.ndarray) -> np.ndarray:
        diff = np.subtract.outer(freq_a, freq_b)
        phases = np.exp(1j * np.multiply.outer(diff, grid))
        return phases.mean(axis=-1) * 2.0 * np.pi

    f2 = _angle_factor(mell, mq)  # from theta2: pairs (m', n')
    f3 = _angle_factor(mell, mq)  # from theta3: pairs (m, n)
    total = np.einsum("abcd,bd,ac->abcd", core, f2, f3)

    expected = np.zeros_like(total)
    if ell == q:
        val = 8.0 * np.pi**2 / (2 * ell + 1)
        for a in range(2 * ell + 1):
            for b in range(2 * ell + 1):
                expected[a, b, a, b] = val
    return float(np.max(np.abs(total - expected)))
