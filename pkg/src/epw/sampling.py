"""Density-driven node generation in the evanescent parameter domain.

The parametric domain is Y = S2 x [0, 2pi) x [0, inf): Euler angles plus the
evanescence parameter zeta. Nodes are drawn so that zeta follows the
surrogate cumulative distribution built from normalized upper incomplete
gamma ratios, then every node is weighted by the reciprocal Christoffel sum
mu_N, which is what keeps the resulting wave sets numerically stable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import basis, specfun, sphquad
from .solver import ApproximationSet
from .waves import ParametricPoint, evanescent_direction

_TWO_PI = 2.0 * math.pi

# zeta values are chunked through the ray-harmonic table so the (L+1)^2 lanes
# never materialize more than a few tens of MB at once
_MU_CHUNK = 4096

_ZETA_CAP = 1.0e6
_NODE_CAP = 2**26

# substream indices, fanned out of the config seed; keep stable across
# releases or seeded artifacts change
_SUBSTREAMS = {"surrogate": 0, "strategy-b": 1, "strategy-d": 2}


def substream(seed: int, purpose: str) -> np.random.Generator:
    """Philox (counter-based) generator for one named purpose; no global state."""
    if purpose not in _SUBSTREAMS:
        raise KeyError(f"unknown substream purpose {purpose!r}")
    seq = np.random.SeedSequence(seed, spawn_key=(_SUBSTREAMS[purpose],))
    return np.random.Generator(np.random.Philox(seq))


def mu_N(zeta, kappa: float, L: int):
    """Reciprocal of the truncated kernel sum sum_l alpha_l^2 |P_l(zeta)|^2.

    Independent of all three angles: the Wigner matrices appearing in the full
    coefficient sum are unitary and drop out of the l2 norm over m.
    """
    if kappa <= 0:
        raise ValueError("wavenumber must be positive")
    arr = np.atleast_1d(np.asarray(zeta, dtype=float))
    if np.any(arr < 0):
        raise ValueError("zeta must be nonnegative")
    log_alpha = np.array([basis.alpha_approx_log(ell, kappa) for ell in range(L + 1)])
    weights = np.zeros((L + 1, L + 1, 1))
    for ell in range(L + 1):
        weights[ell, 0] = 1.0
        weights[ell, 1 : ell + 1] = 2.0  # +-m pairs coincide on the ray
    out = np.empty(arr.shape)
    for lo in range(0, arr.size, _MU_CHUNK):
        z = arr[lo : lo + _MU_CHUNK] / (2.0 * kappa) + 1.0
        logs = 2.0 * specfun.ray_harmonic_log_table(L, z)
        logs += 2.0 * log_alpha[:, None, None]
        logs = np.where(weights > 0, logs, -np.inf)
        ref = np.max(logs, axis=(0, 1))
        total = ref + np.log(np.sum(weights * np.exp(logs - ref), axis=(0, 1)))
        out[lo : lo + _MU_CHUNK] = np.exp(-total)
    if np.ndim(zeta) == 0:
        return float(out[0])
    return out


def upsilon_hat(zeta, kappa: float, L: int):
    """Surrogate zeta-CDF from normalized upper incomplete gamma ratios."""
    if kappa <= 0:
        raise ValueError("wavenumber must be positive")
    arr = np.atleast_1d(np.asarray(zeta, dtype=float))
    if np.any(arr < 0):
        raise ValueError("zeta must be nonnegative")
    N = (L + 1) ** 2
    x = 2.0 * kappa + arr
    acc = np.zeros(arr.shape)
    for ell in range(L + 1):
        a = 2.0 * ell + 1.5
        log_num = specfun.upper_incomplete_Q_log_many(a, x)
        log_den = specfun.upper_incomplete_Q_log(a, 2.0 * kappa)
        acc += (2 * ell + 1) * np.exp(log_num - log_den)
    out = np.clip(1.0 - acc / N, 0.0, 1.0)
    if np.ndim(zeta) == 0:
        return float(out[0])
    return out


def invert_upsilon(u: float, kappa: float, L: int, tol: float = 1e-10) -> float:
    """Bisection inverse of the surrogate CDF; relative tolerance on zeta."""
    if not 0.0 <= u:
        raise ValueError("u must be nonnegative")
    if u >= 1.0:
        raise ValueError("the surrogate CDF never reaches 1 at finite zeta")
    if u == 0.0:
        return 0.0
    hi = 4.0 * kappa
    while upsilon_hat(hi, kappa, L) <= u:
        hi *= 2.0
        if hi > _ZETA_CAP:
            raise ArithmeticError(f"CDF bracket expansion exceeded zeta = {_ZETA_CAP:g}")
    lo = 0.0
    while hi - lo > tol * max(hi, 1.0):
        mid = 0.5 * (lo + hi)
        if upsilon_hat(mid, kappa, L) > u:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _invert_upsilon_many(
    u: np.ndarray, kappa: float, L: int, tol: float = 1e-10
) -> np.ndarray:
    """Vector bisection with the same bracket and tolerance as the scalar."""
    if np.any(u >= 1.0) or np.any(u < 0.0):
        raise ValueError("CDF arguments must lie in [0, 1)")
    hi = np.full(u.shape, 4.0 * kappa)
    val = upsilon_hat(hi, kappa, L)
    need = val <= u
    while need.any():
        hi[need] *= 2.0
        if hi.max() > _ZETA_CAP:
            raise ArithmeticError(f"CDF bracket expansion exceeded zeta = {_ZETA_CAP:g}")
        val = np.array(upsilon_hat(hi[need], kappa, L), ndmin=1)
        sub = need.copy()
        need = np.zeros_like(need)
        need[sub] = val <= u[sub]
    lo = np.zeros(u.shape)
    while True:
        active = (hi - lo) > tol * np.maximum(hi, 1.0)
        if not active.any():
            break
        mid = 0.5 * (lo[active] + hi[active])
        above = np.array(upsilon_hat(mid, kappa, L), ndmin=1) > u[active]
        hi[active] = np.where(above, mid, hi[active])
        lo[active] = np.where(above, lo[active], mid)
    out = 0.5 * (lo + hi)
    out[u == 0.0] = 0.0
    return out


# Gray-code Sobol direction numbers for dimensions 2..4 as (s, a, m_i),
# from the standard Joe-Kuo table (new-joe-kuo-6.21201); dimension 1 is the
# van der Corput radical inverse.
_SOBOL_PARAMS = (
    None,
    (1, 0, (1,)),
    (2, 1, (1, 3)),
    (3, 1, (1, 3, 1)),
)

_SOBOL_BITS = 32


def _sobol_directions(dim_index: int) -> list[int]:
    nbits = _SOBOL_BITS
    v = [0] * (nbits + 1)  # 1-based
    if dim_index == 0:
        for j in range(1, nbits + 1):
            v[j] = 1 << (nbits - j)
        return v
    s, a, m = _SOBOL_PARAMS[dim_index]
    for j in range(1, s + 1):
        v[j] = m[j - 1] << (nbits - j)
    for j in range(s + 1, nbits + 1):
        acc = v[j - s] ^ (v[j - s] >> s)
        for k in range(1, s):
            if (a >> (s - 1 - k)) & 1:
                acc ^= v[j - k]
        v[j] = acc
    return v


def sobol(dim: int, n: int, skip: int = 1) -> np.ndarray:
    """First n Gray-code Sobol points starting at index `skip`.

    The default skip drops the all-zeros point at index 0. Deterministic and
    platform independent; dimensions beyond 4 are not tabulated here.
    """
    if not 1 <= dim <= 4:
        raise ValueError(f"unsupported Sobol dimension {dim}")
    if n < 0 or skip < 0:
        raise ValueError("n and skip must be nonnegative")
    total = n + skip
    if total >= 1 << _SOBOL_BITS:
        raise ValueError("index range exceeds the 32-bit construction")
    out = np.empty((n, dim))
    scale = float(1 << _SOBOL_BITS)
    for d in range(dim):
        v = _sobol_directions(d)
        xs = np.empty(max(total, 1), dtype=np.uint64)
        xs[0] = 0
        acc = 0
        for i in range(1, total):
            acc ^= v[(i & -i).bit_length()]
            xs[i] = acc
        out[:, d] = xs[skip:total].astype(float) / scale
    return out


@dataclass(frozen=True)
class NodeSet:
    """Immutable sample of parameter nodes with their density weights."""

    strategy: str
    points: tuple
    norms: tuple
    seed: int
    L: int
    P: int
    kappa: float

    def __post_init__(self) -> None:
        if len(self.points) == 0 or len(self.points) != len(self.norms):
            raise ValueError("points and norms must be nonempty and aligned")
        if not all(math.isfinite(v) and v > 0 for v in self.norms):
            raise ValueError("normalization scalars must be finite and positive")

    def __len__(self) -> int:
        return len(self.points)

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("theta1,theta2,theta3,zeta,norm\n")
            for pt, nrm in zip(self.points, self.norms):
                fh.write(
                    f"{pt.theta1:.16e},{pt.theta2:.16e},{pt.theta3:.16e},"
                    f"{pt.zeta:.16e},{nrm:.16e}\n"
                )


def _wrap_angle(values: np.ndarray) -> np.ndarray:
    # mod can round up to the period itself for tiny negatives
    wrapped = np.mod(values, _TWO_PI)
    return np.where(wrapped >= _TWO_PI, 0.0, wrapped)


def _angular_source(source, count: int) -> np.ndarray:
    if source is None:
        raise ValueError("strategies (d)/(e) require an angular point source")
    if isinstance(source, str):
        if source != "spiral":
            raise ValueError(f"unknown angular source {source!r}")
        return sphquad.fibonacci_sphere(count)
    pts = source.points if isinstance(source, sphquad.CubatureRule) else np.asarray(source, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError("angular source must be (n, 3) unit vectors")
    if len(pts) != count:
        raise ValueError(f"angular source has {len(pts)} points, need {count}")
    if np.max(np.abs(np.linalg.norm(pts, axis=1) - 1.0)) > 1e-8:
        raise ValueError("angular source points must lie on the unit sphere")
    return pts


def generate_nodes(
    strategy: str,
    L: int,
    P: int,
    kappa: float,
    seed: int = 0,
    extremal_source=None,
) -> NodeSet:
    """Draw P (after rounding) nodes in Y under one of the five strategies.

    (a) midpoint tensor grid, P rounded up to a 4th power; (b) seeded uniform;
    (c) Sobol in dimension 4; (d)/(e) angles from a spherical point system
    with P rounded up to a perfect square, and only (theta3, zeta) sampled,
    uniformly for (d), by Sobol for (e).
    """
    if strategy not in ("a", "b", "c", "d", "e"):
        raise ValueError(f"unknown sampling strategy {strategy!r}")
    if P < 1:
        raise ValueError("node budget must be positive")
    if strategy in ("a", "b", "c"):
        if strategy == "a":
            g = max(1, round(P**0.25))
            while g**4 < P:
                g += 1
            while g > 1 and (g - 1) ** 4 >= P:
                g -= 1
            count = g**4
            if count > _NODE_CAP:
                raise ValueError("rounded node budget overflows the grid cap")
            mids = (np.arange(g) + 0.5) / g
            base = np.stack(
                np.meshgrid(mids, mids, mids, mids, indexing="ij"), axis=-1
            ).reshape(-1, 4)
        elif strategy == "b":
            if P > _NODE_CAP:
                raise ValueError("node budget overflows the cap")
            base = substream(seed, "strategy-b").random((P, 4))
        else:
            if P > _NODE_CAP:
                raise ValueError("node budget overflows the cap")
            base = sobol(4, P)
        theta1 = np.arccos(1.0 - 2.0 * base[:, 0])
        theta2 = _wrap_angle(_TWO_PI * base[:, 1])
        theta3 = _wrap_angle(_TWO_PI * base[:, 2])
        zeta = _invert_upsilon_many(base[:, 3], kappa, L)
    else:
        q = math.isqrt(P)
        if q * q < P:
            q += 1
        count = q * q
        if count > _NODE_CAP:
            raise ValueError("rounded node budget overflows the square cap")
        dirs = _angular_source(extremal_source, count)
        theta1 = np.arccos(np.clip(dirs[:, 2], -1.0, 1.0))
        theta2 = _wrap_angle(np.arctan2(dirs[:, 1], dirs[:, 0]))
        if strategy == "d":
            pair = substream(seed, "strategy-d").random((count, 2))
        else:
            pair = sobol(2, count)
        theta3 = _wrap_angle(_TWO_PI * pair[:, 0])
        zeta = _invert_upsilon_many(pair[:, 1], kappa, L)
    actual = len(theta1)
    mu = np.atleast_1d(mu_N(zeta, kappa, L))
    norms = np.sqrt(mu / actual)
    points = tuple(
        ParametricPoint(float(a), float(b), float(c), float(z))
        for a, b, c, z in zip(theta1, theta2, theta3, zeta)
    )
    return NodeSet(
        strategy=strategy,
        points=points,
        norms=tuple(float(v) for v in norms),
        seed=seed,
        L=L,
        P=P,
        kappa=kappa,
    )


def build_evanescent_set(
    nodes: NodeSet,
    kappa: float,
    L: int,
    normalization: str = "density",
    boundary_points=None,
) -> ApproximationSet:
    """Evanescent wave family over a NodeSet.

    `density` attaches the sqrt(mu_N / P) scalars carried by the nodes;
    `boundary-sup` rescales each wave to unit sup modulus over the supplied
    boundary sample instead, the variant used on non-spherical domains.
    """
    if kappa != nodes.kappa or L != nodes.L:
        raise ValueError("kappa/L disagree with the NodeSet provenance")
    directions = np.array(
        [evanescent_direction(pt, kappa).vector for pt in nodes.points]
    )
    if normalization == "density":
        norms = np.array(nodes.norms)
    elif normalization == "boundary-sup":
        if boundary_points is None:
            raise ValueError("boundary-sup normalization needs boundary points")
        pts = np.asarray(boundary_points, dtype=float)
        # |phi_p(x)| = exp(-kappa Im d_p . x); divide by its max over the sample
        norms = np.exp(kappa * np.min(pts @ directions.imag.T, axis=0))
    else:
        raise ValueError(f"unknown normalization {normalization!r}")
    return ApproximationSet(
        kappa=kappa,
        directions=directions,
        norms=norms,
        kind="evanescent",
        nodes=nodes.points,
    )
