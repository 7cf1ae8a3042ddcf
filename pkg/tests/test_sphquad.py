"""Spherical point systems, interpolatory cubature, polyhedral boundary grids."""

import math
import warnings

import numpy as np
import pytest

import _oracles as oracles
from epw import specfun, sphquad

FOUR_PI = 4.0 * math.pi


class TestGram:
    def test_diagonal_value(self):
        pts = sphquad.fibonacci_sphere(36)
        K = sphquad.gram_K(5, pts)
        assert np.allclose(np.diag(K), 36 / FOUR_PI)
        assert np.diag(K)[0] == pytest.approx(2.864788976, abs=1e-9)

    def test_factors_through_harmonic_matrix(self):
        rng = np.random.default_rng(1)
        pts = sphquad.fibonacci_sphere(16) + 0.05 * rng.normal(size=(16, 3))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        theta1 = np.arccos(np.clip(pts[:, 2], -1, 1))
        theta2 = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2 * math.pi)
        G = np.array(
            [
                [specfun.spherical_harmonic(l, m, t, p) for t, p in zip(theta1, theta2)]
                for l in range(4)
                for m in range(-l, l + 1)
            ]
        )
        K = sphquad.gram_K(3, pts)
        assert np.max(np.abs(K - (G.conj().T @ G).real)) < 1e-10

    def test_positive_semidefinite(self):
        pts = sphquad.fibonacci_sphere(49)
        K = sphquad.gram_K(6, pts)
        assert np.min(np.linalg.eigvalsh(K)) >= -1e-10
        assert np.max(np.abs(K - K.T)) == 0.0


class TestExtremalOptimizer:
    def test_degree_zero(self):
        pts = sphquad.optimize_extremal(0)
        assert pts.shape == (1, 3)
        w = sphquad.cubature_weights(0, pts)
        assert w[0] == pytest.approx(FOUR_PI, rel=1e-14)

    def test_degree_three_exactness(self):
        pts = sphquad.optimize_extremal(3)
        w = sphquad.cubature_weights(3, pts)
        assert sphquad.exactness_residual(pts, w, 3) < 1e-9

    def test_beats_spiral_initialization(self):
        pts = sphquad.optimize_extremal(5)
        spiral = sphquad.fibonacci_sphere(36)
        opt = np.linalg.slogdet(sphquad.gram_K(5, pts))
        init = np.linalg.slogdet(sphquad.gram_K(5, spiral))
        assert opt.sign > 0
        assert opt.logabsdet >= init.logabsdet

    def test_pins_gauge_freedom(self):
        pts = sphquad.optimize_extremal(4, seed=3)
        assert np.allclose(pts[0], [0.0, 0.0, 1.0], atol=1e-12)
        assert abs(pts[1, 1]) < 1e-12  # second point on the prime meridian

    def test_deterministic(self):
        a = sphquad.optimize_extremal(2, seed=5)
        b = sphquad.optimize_extremal(2, seed=5)
        assert np.array_equal(a, b)

    def test_degree_cap(self):
        with pytest.raises(ValueError):
            sphquad.optimize_extremal(16)


class TestCubatureWeights:
    def test_weight_sum(self):
        for L in (1, 4, 6):
            pts = sphquad.optimize_extremal(L)
            w = sphquad.cubature_weights(L, pts)
            assert np.sum(w) == pytest.approx(FOUR_PI, abs=1e-8)

    def test_degree_six_exactness(self):
        pts = sphquad.optimize_extremal(6)
        w = sphquad.cubature_weights(6, pts)
        assert sphquad.exactness_residual(pts, w, 6) < 1e-9
        assert np.all(w > 0)

    def test_singular_system_rejected(self):
        pts = sphquad.fibonacci_sphere(4)
        pts[1] = pts[0]  # duplicate point makes the gram singular
        with pytest.raises(sphquad.FundamentalSystemError):
            sphquad.cubature_weights(1, pts)

    def test_positivity_policy(self):
        # fibonacci 121 is fundamental at degree 10 but has a negative weight
        fib = sphquad.fibonacci_sphere(121)
        with pytest.raises(sphquad.PositivityError):
            sphquad.cubature_weights(10, fib, positivity="raise")
        with pytest.warns(RuntimeWarning):
            w = sphquad.cubature_weights(10, fib, positivity="warn")
        assert np.min(w) < 0
        assert np.sum(w) == pytest.approx(FOUR_PI, abs=1e-8)

    def test_convergence_for_entire_function(self):
        u = np.array([0.3, -0.5, 0.81])

        def v(pts):
            return np.exp(pts @ u)

        ref = oracles.surface_integral_brute(v)
        errs = []
        for L in (4, 8, 12, 16):
            pts = sphquad.fibonacci_sphere((L + 1) ** 2)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                w = sphquad.cubature_weights(L, pts, positivity="warn")
            errs.append(abs(np.sum(w * v(pts)) - ref))
        # decrease until the rounding floor, where order is meaningless
        for a, b in zip(errs, errs[1:]):
            assert b < a or b < 1e-10


class TestRuleInvariants:
    def test_unit_norm_enforced(self):
        pts = sphquad.fibonacci_sphere(4)
        w = np.full(4, math.pi)
        pts_bad = pts.copy()
        pts_bad[2] *= 0.9
        with pytest.raises(ValueError):
            sphquad.CubatureRule(points=pts_bad, weights=w, degree=0)

    def test_weight_sum_enforced(self):
        pts = sphquad.fibonacci_sphere(4)
        with pytest.raises(ValueError):
            sphquad.CubatureRule(points=pts, weights=np.ones(4), degree=0)


class TestLoadPointset:
    def test_four_point_file(self, tmp_path):
        path = tmp_path / "rule.txt"
        pts = sphquad.optimize_extremal(1)
        w = sphquad.cubature_weights(1, pts)
        lines = ["# comment line"]
        for (x, y, z), wi in zip(pts, w):
            lines.append(f"{x:.17e} {y:.17e} {z:.17e} {wi:.17e}")
        path.write_text("\n".join(lines) + "\n")
        rule = sphquad.load_pointset(str(path))
        assert len(rule) == 4
        assert np.sum(rule.weights) == pytest.approx(FOUR_PI, abs=1e-8)

    def test_off_sphere_point_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("0.9 0 0 6.28\n0 1 0 2.0\n0 0 1 2.0\n-1 0 0 2.36\n")
        with pytest.raises(ValueError):
            sphquad.load_pointset(str(path))

    def test_malformed_row_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("1 0\n")
        with pytest.raises(ValueError):
            sphquad.load_pointset(str(path))

    def test_recomputes_missing_weights(self, tmp_path):
        pts = sphquad.optimize_extremal(10)
        path = tmp_path / "ext10.txt"
        path.write_text(
            "\n".join(" ".join(f"{c:.17e}" for c in p) for p in pts) + "\n"
        )
        rule = sphquad.load_pointset(str(path))
        assert len(rule) == 121
        assert sphquad.exactness_residual(rule.points, rule.weights, 10) < 1e-8


class TestSurfaceGrids:
    def test_cube_inscribed(self):
        grid = sphquad.surface_grid("cube", 5)
        half = 1.0 / math.sqrt(3.0)
        assert np.max(np.abs(grid.points)) == pytest.approx(half, abs=1e-12)
        # every point sits on a face
        on_face = np.isclose(np.abs(grid.points), half, atol=1e-12).any(axis=1)
        assert np.all(on_face)

    def test_cube_counts_and_dedup(self):
        for n in (2, 3, 5, 8):
            grid = sphquad.surface_grid("cube", n)
            assert len(grid.points) == 6 * n * n - 12 * n + 8
            assert len(np.unique(np.round(grid.points, 9), axis=0)) == len(grid.points)

    def test_tetra_vertices_match_reference(self):
        verts = sphquad.tetrahedron_vertices()
        ref = np.array(
            [
                [-math.sqrt(2.0 / 9.0), math.sqrt(2.0 / 3.0), -1.0 / 3.0],
                [-math.sqrt(2.0 / 9.0), -math.sqrt(2.0 / 3.0), -1.0 / 3.0],
                [math.sqrt(8.0 / 9.0), 0.0, -1.0 / 3.0],
                [0.0, 0.0, 1.0],
            ]
        )
        assert np.max(np.abs(verts - ref)) < 1e-12

    def test_tetra_counts(self):
        for n in (2, 4, 7):
            grid = sphquad.surface_grid("tetra", n)
            assert len(grid.points) == 2 * n * n - 4 * n + 4

    def test_uniform_weight(self):
        grid = sphquad.surface_grid("tetra", 6)
        assert grid.weight == pytest.approx(grid.area / len(grid.points), rel=1e-15)

    def test_chebyshev_spacing(self):
        eq = sphquad.surface_grid("cube", 6, spacing="equispaced")
        ch = sphquad.surface_grid("cube", 6, spacing="chebyshev")
        assert len(eq.points) == len(ch.points)
        assert not np.allclose(eq.points, ch.points)

    def test_minimum_edge_nodes(self):
        with pytest.raises(ValueError):
            sphquad.surface_grid("cube", 1)


def test_fibonacci_points_unit_norm():
    pts = sphquad.fibonacci_sphere(200)
    assert np.max(np.abs(np.linalg.norm(pts, axis=1) - 1.0)) < 1e-12
