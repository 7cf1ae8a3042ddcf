"""Density machinery, inverse-transform sampling, Sobol points, node generation."""

import io
import math

import numpy as np
import pytest

import _oracles as oracles
from epw import basis, sampling, specfun, sphquad, waves

KAPPA = 6.0


class TestMuN:
    def test_single_term_closed_form(self):
        # L=0 kernel has one flat term, so mu_1 is constant in zeta
        ref = 4.0 * math.pi * math.exp(-2.0 * basis.alpha_approx_log(0, KAPPA))
        for zeta in (0.0, 3.0, 11.0):
            assert sampling.mu_N(zeta, KAPPA, 0) == pytest.approx(ref, rel=1e-14)

    def test_bounded_by_mu_1(self):
        grid = np.linspace(0.0, 40.0, 200)
        mu1 = sampling.mu_N(grid, KAPPA, 0)
        mu12 = sampling.mu_N(grid, KAPPA, 12)
        assert np.all(mu12 > 0.0)
        assert np.all(mu12 <= mu1)

    def test_direct_kernel_summation(self):
        # angle-dependent double sum collapses by unitarity; explicit route
        L, zeta, t1, t3 = 6, 2.0, 0.9, 2.2
        z = zeta / (2.0 * KAPPA) + 1.0
        total = 0.0
        for ell in range(L + 1):
            alpha = math.exp(basis.alpha_approx_log(ell, KAPPA))
            W = oracles.wigner_d_explicit(ell, t1)
            for m in range(-ell, ell + 1):
                acc = 0.0 + 0.0j
                for mp in range(-ell, ell + 1):
                    gP = oracles.gamma_norm_exact(ell, abs(mp)) * math.exp(
                        specfun.assoc_legendre_P_log(ell, abs(mp), z)
                    )
                    acc += (
                        gP
                        * (1j) ** (-mp)
                        * W[m + ell, mp + ell]
                        * np.exp(-1j * mp * t3)
                    )
                total += alpha**2 * abs(acc) ** 2
        assert total == pytest.approx(1.0 / sampling.mu_N(zeta, KAPPA, L), rel=1e-10)

    def test_truncated_functional_identity(self):
        # sum over l <= L of the squared scaled modal norms inverts mu_N
        L, zeta = 12, 5.0
        s = sum(
            (waves.modal_norm(ell, zeta, KAPPA) / basis.tau_abs(ell, KAPPA)) ** 2
            for ell in range(L + 1)
        )
        assert s * sampling.mu_N(zeta, KAPPA, L) == pytest.approx(1.0, rel=1e-12)

    def test_scalar_and_vector_forms(self):
        grid = np.array([0.0, 1.5, 7.0])
        vec = sampling.mu_N(grid, KAPPA, 5)
        assert vec.shape == (3,)
        for z, v in zip(grid, vec):
            assert sampling.mu_N(float(z), KAPPA, 5) == pytest.approx(v, rel=1e-15)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            sampling.mu_N(1.0, 0.0, 4)
        with pytest.raises(ValueError):
            sampling.mu_N(-0.5, KAPPA, 4)


class TestUpsilonHat:
    def test_endpoints(self):
        assert sampling.upsilon_hat(0.0, KAPPA, 8) == 0.0
        assert sampling.upsilon_hat(50.0 * KAPPA, KAPPA, 8) > 0.999
        assert sampling.upsilon_hat(1e3 * KAPPA, KAPPA, 8) == pytest.approx(
            1.0, abs=1e-6
        )

    def test_monotone_on_grid(self):
        grid = np.linspace(0.0, 30.0 * KAPPA, 10_000)
        vals = sampling.upsilon_hat(grid, KAPPA, 8)
        assert np.all(np.diff(vals) >= 0.0)
        assert np.all((vals >= 0.0) & (vals <= 1.0))

    def test_shape_against_defining_quadrature(self):
        # the production surrogate swaps one weight inside the integrand; the
        # two curves stay within a fixed band over the bulk of the mass
        grid = np.linspace(0.0, 60.0, 31)
        exact = oracles.upsilon_exact(grid, 4.0, 8)
        hat = sampling.upsilon_hat(grid, 4.0, 8)
        assert float(np.max(np.abs(exact - hat))) < 0.3

    def test_vector_matches_scalar(self):
        grid = np.array([0.3, 4.0, 19.0])
        vec = sampling.upsilon_hat(grid, KAPPA, 6)
        for z, v in zip(grid, vec):
            assert sampling.upsilon_hat(float(z), KAPPA, 6) == pytest.approx(
                v, abs=1e-15
            )

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            sampling.upsilon_hat(-1.0, KAPPA, 6)


class TestInvertUpsilon:
    def test_zero_maps_to_zero(self):
        assert sampling.invert_upsilon(0.0, KAPPA, 8) == 0.0

    def test_roundtrip(self):
        for u in (0.1, 0.5, 0.9):
            zeta = sampling.invert_upsilon(u, KAPPA, 8)
            assert abs(sampling.upsilon_hat(zeta, KAPPA, 8) - u) <= 1e-10

    def test_median_shifts_with_truncation(self):
        kappa = 16.0
        low = sampling.invert_upsilon(0.5, kappa, 16)
        high = sampling.invert_upsilon(0.5, kappa, 64)
        assert high > low

    def test_rejects_unreachable_u(self):
        with pytest.raises(ValueError):
            sampling.invert_upsilon(1.0, KAPPA, 8)
        with pytest.raises(ValueError):
            sampling.invert_upsilon(-0.1, KAPPA, 8)

    def test_bracket_cap(self, monkeypatch):
        monkeypatch.setattr(sampling, "_ZETA_CAP", 8.0)
        with pytest.raises(ArithmeticError):
            sampling.invert_upsilon(0.99, 4.0, 8)


class TestSobol:
    def test_first_point_is_origin(self):
        assert np.array_equal(sampling.sobol(2, 1, skip=0), [[0.0, 0.0]])

    def test_leading_block_stratifies(self):
        # each dimension visits every left endpoint j/8 exactly once
        pts = sampling.sobol(4, 8, skip=0)
        for d in range(4):
            assert np.array_equal(np.sort(pts[:, d]), np.arange(8) / 8.0)

    def test_aligned_block_hits_midpoints(self):
        pts = sampling.sobol(4, 8, skip=8)
        for d in range(4):
            assert np.array_equal(
                np.sort(pts[:, d]), np.arange(8) / 8.0 + 1.0 / 16.0
            )

    def test_default_skip_drops_origin(self):
        pts = sampling.sobol(1, 7)
        assert np.array_equal(np.sort(pts[:, 0]), np.arange(1, 8) / 8.0)

    def test_deterministic(self):
        assert np.array_equal(sampling.sobol(3, 100), sampling.sobol(3, 100))

    def test_beats_uniform_discrepancy(self):
        dq = oracles.star_discrepancy_2d(sampling.sobol(2, 256))
        uniform = []
        for seed in range(10):
            rng = np.random.default_rng(seed)
            uniform.append(oracles.star_discrepancy_2d(rng.random((256, 2))))
        assert dq < float(np.median(uniform))

    def test_dimension_limit(self):
        with pytest.raises(ValueError):
            sampling.sobol(5, 10)
        with pytest.raises(ValueError):
            sampling.sobol(0, 10)

    def test_range_validation(self):
        with pytest.raises(ValueError):
            sampling.sobol(2, -1)
        with pytest.raises(ValueError):
            sampling.sobol(2, 1 << 32)


class TestGenerateNodes:
    def test_grid_strategy_rounds_to_fourth_power(self):
        nodes = sampling.generate_nodes("a", 4, 10, KAPPA)
        assert len(nodes) == 16

    def test_square_strategies_round_up(self):
        nodes = sampling.generate_nodes(
            "d", 4, 10, KAPPA, seed=1, extremal_source="spiral"
        )
        assert len(nodes) == 16

    def test_extremal_rule_angles_reused(self):
        # gauge pinning puts the first rule point at the north pole
        system = sphquad.optimize_extremal(3)
        nodes = sampling.generate_nodes("d", 4, 10, KAPPA, extremal_source=system)
        assert nodes.points[0].theta1 == 0.0
        dirs = np.array(
            [
                waves.propagative_direction(pt.theta1, pt.theta2)
                for pt in nodes.points
            ]
        )
        assert np.allclose(dirs, system, atol=1e-12)

    def test_median_base_sample_maps_to_equator(self):
        # the first default Sobol point sits at the cube center
        nodes = sampling.generate_nodes("c", 8, 1, 4.0)
        pt = nodes.points[0]
        assert pt.theta1 == pytest.approx(math.pi / 2, abs=1e-15)
        assert pt.theta2 == pytest.approx(math.pi)
        assert pt.theta3 == pytest.approx(math.pi)
        assert sampling.upsilon_hat(pt.zeta, 4.0, 8) == pytest.approx(0.5, abs=1e-9)

    def test_deterministic(self):
        for strategy in ("b", "e"):
            a = sampling.generate_nodes(
                strategy, 6, 25, KAPPA, seed=7, extremal_source="spiral"
            )
            b = sampling.generate_nodes(
                strategy, 6, 25, KAPPA, seed=7, extremal_source="spiral"
            )
            assert a.points == b.points
            assert a.norms == b.norms

    def test_seed_changes_draws(self):
        a = sampling.generate_nodes("b", 6, 25, KAPPA, seed=0)
        b = sampling.generate_nodes("b", 6, 25, KAPPA, seed=1)
        assert a.points != b.points

    def test_ranges(self):
        nodes = sampling.generate_nodes("b", 6, 200, KAPPA, seed=3)
        for pt in nodes.points:
            assert 0.0 <= pt.theta1 <= math.pi
            assert 0.0 <= pt.theta2 < 2.0 * math.pi
            assert 0.0 <= pt.theta3 < 2.0 * math.pi
            assert pt.zeta >= 0.0

    def test_normalization_scalars(self):
        nodes = sampling.generate_nodes("b", 6, 30, KAPPA, seed=2)
        for pt, nrm in zip(nodes.points, nodes.norms):
            ref = math.sqrt(sampling.mu_N(pt.zeta, KAPPA, 6) / len(nodes))
            assert nrm == pytest.approx(ref, rel=1e-14)

    def test_missing_angular_source(self):
        with pytest.raises(ValueError):
            sampling.generate_nodes("e", 4, 9, KAPPA)

    def test_mismatched_angular_source(self):
        with pytest.raises(ValueError):
            sampling.generate_nodes(
                "e", 4, 9, KAPPA, extremal_source=sphquad.fibonacci_sphere(4)
            )

    def test_strategy_validation(self):
        with pytest.raises(ValueError):
            sampling.generate_nodes("f", 4, 9, KAPPA)
        with pytest.raises(ValueError):
            sampling.generate_nodes("a", 4, 0, KAPPA)


class TestNodeSet:
    def test_csv_serialization(self, tmp_path):
        nodes = sampling.generate_nodes("b", 4, 5, KAPPA, seed=11)
        path = tmp_path / "nodes.csv"
        nodes.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "theta1,theta2,theta3,zeta,norm"
        assert len(lines) == 6
        row = [float(tok) for tok in lines[3].split(",")]
        pt = nodes.points[2]
        assert row == [pt.theta1, pt.theta2, pt.theta3, pt.zeta, nodes.norms[2]]

    def test_validation(self):
        pt = waves.ParametricPoint(0.5, 0.5, 0.5, 1.0)
        with pytest.raises(ValueError):
            sampling.NodeSet(
                strategy="b", points=(), norms=(), seed=0, L=4, P=0, kappa=KAPPA
            )
        with pytest.raises(ValueError):
            sampling.NodeSet(
                strategy="b", points=(pt,), norms=(0.0,), seed=0, L=4, P=1,
                kappa=KAPPA,
            )
        with pytest.raises(ValueError):
            sampling.NodeSet(
                strategy="b", points=(pt,), norms=(1.0, 2.0), seed=0, L=4, P=1,
                kappa=KAPPA,
            )


class TestSubstream:
    def test_named_purposes_are_independent(self):
        a = sampling.substream(5, "strategy-b").random(4)
        b = sampling.substream(5, "strategy-d").random(4)
        assert not np.allclose(a, b)
        again = sampling.substream(5, "strategy-b").random(4)
        assert np.array_equal(a, again)

    def test_unknown_purpose(self):
        with pytest.raises(KeyError):
            sampling.substream(5, "nonsense")


class TestBuildEvanescentSet:
    def test_degenerate_nodes_give_propagative_directions(self):
        pts = tuple(
            waves.ParametricPoint(t1, t2, t3, 0.0)
            for t1, t2, t3 in ((0.4, 1.0, 2.0), (2.0, 3.0, 0.1), (1.2, 5.5, 4.4))
        )
        nodes = sampling.NodeSet(
            strategy="b", points=pts, norms=(1.0, 1.0, 1.0), seed=0, L=4, P=3,
            kappa=KAPPA,
        )
        aset = sampling.build_evanescent_set(nodes, KAPPA, 4)
        assert np.allclose(aset.directions.imag, 0.0)
        for d, pt in zip(aset.directions, pts):
            assert np.allclose(
                d.real, waves.propagative_direction(pt.theta1, pt.theta2)
            )

    def test_density_norms_recomputed(self):
        nodes = sampling.generate_nodes("b", 5, 12, KAPPA, seed=4)
        aset = sampling.build_evanescent_set(nodes, KAPPA, 5)
        for pt, nrm in zip(nodes.points, aset.norms):
            assert nrm == pytest.approx(
                math.sqrt(sampling.mu_N(pt.zeta, KAPPA, 5) / 12), rel=1e-14
            )

    def test_provenance_mismatch(self):
        nodes = sampling.generate_nodes("b", 5, 12, KAPPA, seed=4)
        with pytest.raises(ValueError):
            sampling.build_evanescent_set(nodes, KAPPA + 1.0, 5)
        with pytest.raises(ValueError):
            sampling.build_evanescent_set(nodes, KAPPA, 6)

    def test_boundary_sup_normalization(self):
        nodes = sampling.generate_nodes(
            "e", 8, 9, 4.0, seed=3, extremal_source="spiral"
        )
        grid = sphquad.surface_grid("cube", 6)
        aset = sampling.build_evanescent_set(
            nodes, 4.0, 8, normalization="boundary-sup",
            boundary_points=grid.points,
        )
        for d, nrm in zip(aset.directions, aset.norms):
            sup = np.max(np.abs(nrm * np.exp(1j * 4.0 * (grid.points @ d))))
            assert sup == pytest.approx(1.0, abs=1e-12)

    def test_boundary_sup_needs_points(self):
        nodes = sampling.generate_nodes("b", 5, 4, KAPPA, seed=0)
        with pytest.raises(ValueError):
            sampling.build_evanescent_set(
                nodes, KAPPA, 5, normalization="boundary-sup"
            )
        with pytest.raises(ValueError):
            sampling.build_evanescent_set(nodes, KAPPA, 5, normalization="what")
