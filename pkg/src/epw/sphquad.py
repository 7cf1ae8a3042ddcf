"""Point systems and interpolatory cubature on the unit sphere, plus
boundary grids for the cube and tetrahedron test geometries.

A fundamental system is a set of S = (L+1)^2 sphere points whose degree-L
reproducing-kernel Gram matrix is nonsingular; cubature weights then solve
K w = 1 and integrate every harmonic of degree <= L exactly. Extremal
systems additionally maximize det K, which keeps the weights positive.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import specfun

__all__ = [
    "CubatureRule",
    "SurfaceGrid",
    "FundamentalSystemError",
    "PositivityError",
    "fibonacci_sphere",
    "gram_K",
    "optimize_extremal",
    "cubature_weights",
    "exactness_residual",
    "load_pointset",
    "surface_grid",
]

_FOUR_PI = 4.0 * math.pi

# half-edge of the axis-aligned cube inscribed in the unit sphere
_CUBE_H = 1.0 / math.sqrt(3.0)

_TETRA_VERTICES = np.array(
    [
        [-math.sqrt(2.0 / 9.0), math.sqrt(2.0 / 3.0), -1.0 / 3.0],
        [-math.sqrt(2.0 / 9.0), -math.sqrt(2.0 / 3.0), -1.0 / 3.0],
        [math.sqrt(8.0 / 9.0), 0.0, -1.0 / 3.0],
        [0.0, 0.0, 1.0],
    ]
)

_TETRA_FACES = ((0, 1, 2), (0, 1, 3), (1, 2, 3), (0, 2, 3))


class FundamentalSystemError(RuntimeError):
    """The point set does not span the degree-L harmonic space."""


class PositivityError(RuntimeError):
    """A cubature weight came out nonpositive."""


@dataclass(frozen=True)
class CubatureRule:
    """Sphere points with interpolatory weights, exact up to ``degree``."""

    points: np.ndarray
    weights: np.ndarray
    degree: int

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3 or len(w) != len(pts):
            raise ValueError("points must be (S, 3) with matching weights")
        radii = np.linalg.norm(pts, axis=1)
        if np.max(np.abs(radii - 1.0)) > 1e-12:
            raise ValueError("cubature points must lie on the unit sphere")
        if abs(w.sum() - _FOUR_PI) > 1e-9:
            raise ValueError("cubature weights must sum to the sphere area")
        if np.any(w <= 0):
            warnings.warn("cubature rule carries nonpositive weights", RuntimeWarning)

    def __len__(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class SurfaceGrid:
    """Collocation points on a polyhedron boundary with the uniform weight."""

    shape: str
    points: np.ndarray
    area: float

    @property
    def weight(self) -> float:
        return self.area / len(self.points)

    def __len__(self) -> int:
        return len(self.points)


def fibonacci_sphere(count: int) -> np.ndarray:
    """Near-uniform spiral points; node 0 at the north pole, node 1 on the
    prime meridian. The polar anchoring matches the constraint the extremal
    optimizer enforces, so the spiral doubles as its initialization."""
    if count < 1:
        raise ValueError("need at least one point")
    if count == 1:
        return np.array([[0.0, 0.0, 1.0]])
    p = np.arange(count)
    z = 1.0 - 2.0 * p / (count - 1)
    golden = math.pi * (3.0 - math.sqrt(5.0))
    phi = p * golden
    phi -= phi[1]  # rigid rotation putting node 1 at azimuth 0
    s = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    return np.column_stack([s * np.cos(phi), s * np.sin(phi), z])


def _kernel_weights(L: int) -> np.ndarray:
    return (2.0 * np.arange(L + 1) + 1.0) / _FOUR_PI


def _kernel(L: int, t: np.ndarray) -> np.ndarray:
    P = specfun.legendre_P_all(L, np.clip(t, -1.0, 1.0))
    return np.tensordot(_kernel_weights(L), P, axes=(0, 0))


def _kernel_deriv(L: int, t: np.ndarray) -> np.ndarray:
    t = np.clip(t, -1.0, 1.0)
    P = specfun.legendre_P_all(L, t)
    dP = np.zeros_like(P)
    if L >= 1:
        dP[1] = 1.0
    for ell in range(2, L + 1):
        # derivative recurrence, regular at t = +-1
        dP[ell] = dP[ell - 2] + (2 * ell - 1) * P[ell - 1]
    return np.tensordot(_kernel_weights(L), dP, axes=(0, 0))


def gram_K(L: int, points: np.ndarray) -> np.ndarray:
    """Reproducing-kernel Gram matrix of the degree-L harmonic space."""
    points = np.asarray(points, dtype=float)
    S = (L + 1) ** 2
    if points.shape != (S, 3):
        raise ValueError(f"expected {(S, 3)} points for degree {L}, got {points.shape}")
    K = _kernel(L, points @ points.T)
    return 0.5 * (K + K.T)


def _harmonic_matrix(L: int, points: np.ndarray) -> np.ndarray:
    """All Y_l^m at the points, rows packed in canonical (l, m) order."""
    pts = np.asarray(points, dtype=float)
    r = np.linalg.norm(pts, axis=1)
    ct = np.clip(pts[:, 2] / r, -1.0, 1.0)
    theta2 = np.arctan2(pts[:, 1], pts[:, 0])
    table = specfun.norm_ferrers_table(L, ct)
    out = np.empty(((L + 1) ** 2, len(pts)), dtype=complex)
    for ell in range(L + 1):
        for m in range(-ell, ell + 1):
            am = abs(m)
            row = table[ell, am] * np.exp(1j * m * theta2)
            if m < 0 and am % 2 == 1:
                row = -row
            out[ell * ell + ell + m] = row
    return out


def exactness_residual(points: np.ndarray, weights: np.ndarray, L: int) -> float:
    """Worst moment error over all harmonics of degree <= L."""
    Y = _harmonic_matrix(L, points)
    moments = Y @ np.asarray(weights, dtype=float)
    exact = np.zeros(len(moments), dtype=complex)
    exact[0] = math.sqrt(_FOUR_PI)
    return float(np.max(np.abs(moments - exact)))


def _logdet(K: np.ndarray) -> float:
    sign, value = np.linalg.slogdet(K)
    return value if sign > 0 else -math.inf


def _angles_to_points(theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    s = np.sin(theta)
    return np.column_stack([s * np.cos(phi), s * np.sin(phi), np.cos(theta)])


def optimize_extremal(L: int, seed: int = 0, max_iters: int = 400) -> np.ndarray:
    """Locally det-maximal fundamental system of S = (L+1)^2 points.

    Gradient ascent in the (theta, phi) chart with backtracking; node 0 stays
    at the north pole and node 1 keeps azimuth 0, which pins down the
    rotational degeneracy of the objective. The seed rotates the spiral
    initialization to reach different local maxima; seed 0 is the plain
    spiral.
    """
    if L < 0:
        raise ValueError("degree must be nonnegative")
    if L > 15:
        raise ValueError("built-in optimization is capped at degree 15; load larger systems")
    S = (L + 1) ** 2
    if S == 1:
        return np.array([[0.0, 0.0, 1.0]])

    init = fibonacci_sphere(S)
    theta = np.arccos(np.clip(init[:, 2], -1.0, 1.0))
    phi = np.arctan2(init[:, 1], init[:, 0])
    if seed:
        phi = phi + 2.0 * math.pi * ((seed * 0.6180339887498949) % 1.0)
    theta[0], phi[0], phi[1] = 0.0, 0.0, 0.0

    def objective(th, ph):
        X = _angles_to_points(th, ph)
        return _logdet(gram_K(L, X)), X

    value, X = objective(theta, phi)
    if not math.isfinite(value):
        raise FundamentalSystemError("spiral initialization is degenerate")

    step = 1.0 / S
    for _ in range(max_iters):
        K = gram_K(L, X)
        T = X @ X.T
        Kinv = np.linalg.inv(K)
        M = (Kinv * _kernel_deriv(L, T)) @ X
        grad = 2.0 * M
        cth, sth = np.cos(theta), np.sin(theta)
        cph, sph = np.cos(phi), np.sin(phi)
        dth = np.column_stack([cth * cph, cth * sph, -sth])
        dph = np.column_stack([-sth * sph, sth * cph, np.zeros(S)])
        g_th = np.einsum("ij,ij->i", grad, dth)
        g_ph = np.einsum("ij,ij->i", grad, dph)
        g_th[0] = 0.0
        g_ph[0] = 0.0
        g_ph[1] = 0.0
        gnorm2 = float(g_th @ g_th + g_ph @ g_ph)
        if gnorm2 < 1e-18 * max(1.0, value * value):
            break
        accepted = False
        trial = step
        for _ in range(40):
            new_val, new_X = objective(theta + trial * g_th, phi + trial * g_ph)
            if new_val >= value + 1e-4 * trial * gnorm2:
                theta, phi = theta + trial * g_th, phi + trial * g_ph
                value, X = new_val, new_X
                step = trial * 1.5
                accepted = True
                break
            trial *= 0.5
        if not accepted:
            break

    if not math.isfinite(_logdet(gram_K(L, X))):
        raise FundamentalSystemError("optimization did not reach a fundamental system")
    return X


def cubature_weights(
    L: int, points: np.ndarray, positivity: str = "raise"
) -> np.ndarray:
    """Interpolatory weights solving K w = 1; exact on harmonics up to L."""
    if positivity not in ("raise", "warn"):
        raise ValueError("positivity policy must be 'raise' or 'warn'")
    K = gram_K(L, points)
    try:
        c, low = _cho_factor(K)
        w = _cho_solve((c, low), np.ones(len(K)))
    except np.linalg.LinAlgError as exc:
        raise FundamentalSystemError("Gram matrix is not positive definite") from exc
    total = float(w.sum())
    if abs(total - _FOUR_PI) > 1e-8:
        raise ArithmeticError(f"weights sum to {total!r}, expected the sphere area")
    if np.any(w <= 0):
        msg = f"{int(np.sum(w <= 0))} nonpositive cubature weight(s)"
        if positivity == "raise":
            raise PositivityError(msg)
        warnings.warn(msg, RuntimeWarning)
    return w


def _cho_factor(K: np.ndarray):
    from scipy.linalg import cho_factor

    try:
        return cho_factor(K)
    except Exception as exc:  # scipy raises its own LinAlgError subtype
        raise np.linalg.LinAlgError(str(exc)) from exc


def _cho_solve(factor, rhs):
    from scipy.linalg import cho_solve

    return cho_solve(factor, rhs)


def load_pointset(path: str, positivity: str = "raise") -> CubatureRule:
    """Read a `x y z [w]` text file into a validated rule.

    Weightless files get interpolatory weights recomputed, which requires a
    perfect-square point count (a fundamental-system candidate).
    """
    rows: list[list[float]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            fields = body.split()
            if len(fields) not in (3, 4):
                raise ValueError(f"{path}:{lineno}: expected 3 or 4 fields, got {len(fields)}")
            try:
                rows.append([float(f) for f in fields])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-numeric field") from exc
    if not rows:
        raise ValueError(f"{path}: no points")
    widths = {len(r) for r in rows}
    if len(widths) > 1:
        raise ValueError(f"{path}: mixed 3- and 4-field rows")

    data = np.array(rows)
    pts = data[:, :3]
    radii = np.linalg.norm(pts, axis=1)
    off = np.abs(radii - 1.0)
    if np.max(off) > 1e-8:
        bad = int(np.argmax(off))
        raise ValueError(f"{path}: point {bad + 1} is off the unit sphere by {off[bad]:.3e}")
    pts = pts / radii[:, None]

    S = len(pts)
    L = int(round(math.sqrt(S))) - 1
    if (L + 1) ** 2 != S:
        raise ValueError(f"{path}: {S} points is not a perfect square count")
    if widths == {4}:
        w = data[:, 3]
    else:
        w = cubature_weights(L, pts, positivity=positivity)
    return CubatureRule(points=pts, weights=w, degree=L)


def _dedup(points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    keep = np.ones(len(points), dtype=bool)
    tree = cKDTree(points)
    for i, j in sorted(tree.query_pairs(tol)):
        if keep[i]:
            keep[j] = False
    return points[keep]


def _edge_nodes(n: int, spacing: str) -> np.ndarray:
    """1D node pattern on [0, 1] including both endpoints."""
    if spacing == "equispaced":
        return np.linspace(0.0, 1.0, n)
    if spacing == "chebyshev":
        return 0.5 * (1.0 - np.cos(np.pi * np.arange(n) / (n - 1)))
    raise ValueError(f"unknown spacing {spacing!r}")


def _triangle_grid(a: np.ndarray, b: np.ndarray, c: np.ndarray, n: int, spacing: str) -> np.ndarray:
    """Rows parallel to edge ab, shrinking by one node toward vertex c."""
    rows = _edge_nodes(n, spacing)
    pts = []
    for r, t in enumerate(rows):
        count = n - r
        lo = a + t * (c - a)
        hi = b + t * (c - b)
        if count == 1:
            pts.append(lo)
            continue
        for s in _edge_nodes(count, spacing):
            pts.append(lo + s * (hi - lo))
    return np.array(pts)


def surface_grid(shape: str, n: int, spacing: str = "equispaced") -> SurfaceGrid:
    """Boundary collocation grid: edges first, then per-face parallel rows."""
    if n < 2:
        raise ValueError("need at least two nodes per edge")
    if shape in ("cube", "Q1"):
        h = _CUBE_H
        u = (2.0 * _edge_nodes(n, spacing) - 1.0) * h
        faces = []
        uu, vv = np.meshgrid(u, u, indexing="ij")
        flat = np.column_stack([uu.ravel(), vv.ravel()])
        for axis in range(3):
            for sign in (-1.0, 1.0):
                face = np.empty((len(flat), 3))
                face[:, axis] = sign * h
                face[:, (axis + 1) % 3] = flat[:, 0]
                face[:, (axis + 2) % 3] = flat[:, 1]
                faces.append(face)
        pts = _dedup(np.vstack(faces))
        area = 6.0 * (2.0 * h) ** 2
        grid = SurfaceGrid(shape="cube", points=pts, area=area)
    elif shape in ("tetra", "tetrahedron", "T1"):
        faces = [
            _triangle_grid(*_TETRA_VERTICES[list(f)], n=n, spacing=spacing)
            for f in _TETRA_FACES
        ]
        pts = _dedup(np.vstack(faces))
        edge_sq = float(np.sum((_TETRA_VERTICES[0] - _TETRA_VERTICES[1]) ** 2))
        area = math.sqrt(3.0) * edge_sq
        grid = SurfaceGrid(shape="tetrahedron", points=pts, area=area)
    else:
        raise ValueError(f"unknown shape {shape!r}")
    _check_on_boundary(grid)
    return grid


def tetrahedron_vertices() -> np.ndarray:
    return _TETRA_VERTICES.copy()


def _check_on_boundary(grid: SurfaceGrid) -> None:
    pts = grid.points
    if grid.shape == "cube":
        h = _CUBE_H
        inside = np.max(np.abs(pts), axis=1) <= h + 1e-12
        onface = np.abs(np.max(np.abs(pts), axis=1) - h) <= 1e-12
        ok = inside & onface
    else:
        ok = np.zeros(len(pts), dtype=bool)
        centroid = _TETRA_VERTICES.mean(axis=0)
        for f in _TETRA_FACES:
            a, b, c = _TETRA_VERTICES[list(f)]
            nrm = np.cross(b - a, c - a)
            nrm /= np.linalg.norm(nrm)
            if np.dot(nrm, centroid - a) > 0:
                nrm = -nrm
            dist = (pts - a) @ nrm
            ok |= np.abs(dist) <= 1e-12
    if not np.all(ok):
        raise AssertionError("surface grid point off the boundary")
