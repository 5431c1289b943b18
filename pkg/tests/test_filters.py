import math

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.special import eval_gegenbauer, eval_legendre

from gegennet.filters import (
    FilterCurve,
    GegenbauerParams,
    classic_filter_curve,
    default_grid,
    gegenbauer_apply,
    gegenbauer_closed_form,
    gegenbauer_scalar,
    proximity_matrix,
    recurrence_weights,
    study_curves,
)
from gegennet.graph import build_sign_matrices, normalize_adjacency, symmetrize
from gegennet.linalg import dense_eig
from gegennet.synthetic import random_graph

from conftest import random_symmetric


class TestWeights:
    def test_legendre_alpha(self):
        assert recurrence_weights(2, 0.5) == pytest.approx((1.5, 0.5))
        assert recurrence_weights(3, 0.5) == pytest.approx((5 / 3, 2 / 3))

    def test_alpha_three_halves(self):
        assert recurrence_weights(2, 1.5) == pytest.approx((1.875, 0.75))

    def test_vanishing_denominator(self):
        # k (k + 2a - 1) = 0 at a = (1 - k) / 2
        with pytest.raises(ValueError, match="denominator"):
            recurrence_weights(2, -0.5)

    def test_k_below_two(self):
        with pytest.raises(ValueError):
            recurrence_weights(1, 1.0)


class TestScalar:
    def test_order_zero_is_one(self):
        for alpha in (0.0, 0.5, 1.5):
            params = GegenbauerParams(alpha=alpha)
            for lam in (-1.0, -0.3, 0.0, 0.7, 1.0):
                assert gegenbauer_scalar(lam, 0, params) == 1.0

    def test_legendre_values(self):
        params = GegenbauerParams(alpha=0.5)
        assert gegenbauer_scalar(1.0, 2, params) == pytest.approx(1.0, abs=1e-15)
        assert gegenbauer_scalar(0.0, 2, params) == pytest.approx(-0.5, abs=1e-15)

    def test_legendre_specialization_grid(self):
        # recursion at alpha=0.5 against the explicit Legendre recurrence
        params = GegenbauerParams(alpha=0.5)
        grid = np.linspace(-1, 1, 101)
        p_prev = np.ones_like(grid)
        p_cur = grid.copy()
        for k in range(11):
            if k == 0:
                expected = p_prev
            elif k == 1:
                expected = p_cur
            else:
                p_cur, p_prev = ((2 * k - 1) / k) * grid * p_cur - ((k - 1) / k) * p_prev, p_cur
                expected = p_cur
            got = gegenbauer_scalar(grid, k, params)
            assert np.abs(got - expected).max() < 1e-12

    def test_legendre_against_scipy(self):
        params = GegenbauerParams(alpha=0.5)
        grid = np.linspace(-1, 1, 101)
        for k in range(11):
            assert np.abs(gegenbauer_scalar(grid, k, params) - eval_legendre(k, grid)).max() < 1e-12

    def test_boundedness_on_grid(self):
        # extremal at lambda = 1 for non-negative-coefficient polynomials
        grid = np.linspace(-1, 1, 101)
        for alpha in (0.0, 0.5, 1.0, 1.5, 2.0):
            params = GegenbauerParams(alpha=alpha)
            for k in range(11):
                vals = np.abs(gegenbauer_scalar(grid, k, params))
                at_one = gegenbauer_scalar(1.0, k, params)
                assert vals.max() <= at_one + 1e-12

    def test_alpha_plus_one_variant(self):
        params = GegenbauerParams(alpha=1.5, first_order="alpha_plus_one")
        assert gegenbauer_scalar(0.4, 1, params) == pytest.approx(2.5 * 0.4)

    def test_alpha_below_range(self):
        with pytest.raises(ValueError):
            GegenbauerParams(alpha=-0.6)


class TestClosedForm:
    def test_order_zero_empty_product(self):
        assert gegenbauer_closed_form(0.3, 0, 1.0) == 1.0

    def test_first_order_standard_convention(self):
        # single i=0 term: 2 * alpha * lambda
        assert gegenbauer_closed_form(0.5, 1, 1.0) == pytest.approx(1.0)

    def test_second_order_hand_sum(self):
        # i=0 gives 4 lambda^2, i=1 gives -1 at alpha=1
        assert gegenbauer_closed_form(1.0, 2, 1.0) == pytest.approx(3.0)

    def test_alpha_zero_excluded(self):
        with pytest.raises(ValueError):
            gegenbauer_closed_form(0.5, 2, 0.0)

    def test_matches_scipy_standard_convention(self):
        grid = np.linspace(-1, 1, 41)
        for alpha in (0.5, 1.0, 1.5, 2.0, 3.0):
            for k in range(9):
                got = gegenbauer_closed_form(grid, k, alpha)
                ref = eval_gegenbauer(k, alpha, grid)
                assert np.abs(got - ref).max() < 1e-10

    def test_agrees_with_recursion_at_legendre_point(self):
        # the printed conventions coincide only at alpha = 0.5
        params = GegenbauerParams(alpha=0.5)
        grid = np.linspace(-1, 1, 21)
        for k in range(9):
            a = gegenbauer_scalar(grid, k, params)
            b = gegenbauer_closed_form(grid, k, 0.5)
            assert np.abs(a - b).max() < 1e-12


class TestApply:
    def test_order_zero_identity(self):
        rng = np.random.default_rng(0)
        a = sp.csr_matrix(random_symmetric(rng, 6, scale_into_unit=True))
        h = rng.standard_normal((6, 3))
        assert np.array_equal(gegenbauer_apply(a, h, 0), h)

    def test_first_order_hand_matvec(self):
        a = sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
        params = GegenbauerParams(alpha=0.5)
        out = gegenbauer_apply(a, np.array([1.0, 0.0]), 1, params)
        assert np.allclose(out, [0.0, 1.0])

    def test_spectral_equivalence(self):
        rng = np.random.default_rng(1)
        for alpha in (0.5, 1.0, 1.5):
            params = GegenbauerParams(alpha=alpha)
            a_dense = random_symmetric(rng, 40, scale_into_unit=True)
            a = sp.csr_matrix(a_dense)
            h = rng.standard_normal((40, 2))
            pairs = dense_eig(a_dense)
            for k in range(9):
                fast = gegenbauer_apply(a, h, k, params)
                filt = gegenbauer_scalar(pairs.values, k, params)
                slow = (pairs.vectors * filt) @ (pairs.vectors.T @ h)
                assert np.abs(fast - slow).max() < 1e-8

    def test_linearity(self):
        rng = np.random.default_rng(2)
        a = sp.csr_matrix(random_symmetric(rng, 12, scale_into_unit=True))
        h1 = rng.standard_normal((12, 3))
        h2 = rng.standard_normal((12, 3))
        for k in (1, 3, 5):
            joint = gegenbauer_apply(a, h1 + h2, k)
            split = gegenbauer_apply(a, h1, k) + gegenbauer_apply(a, h2, k)
            assert np.abs(joint - split).max() < 1e-10

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            gegenbauer_apply(sp.eye(3, format="csr"), np.ones((4, 2)), 1)


class TestCurves:
    def test_k_hop_at_one(self):
        curve = classic_filter_curve("k_hop", hyperparameters={"K": 3})
        assert curve.values[-1] == pytest.approx(1.0)

    def test_ppr_at_zero(self):
        curve = classic_filter_curve("ppr", np.array([0.0]), {"alpha": 0.9, "K": 7})
        assert curve.values[0] == pytest.approx(1.0)

    def test_hkpr_partial_poisson_sum(self):
        # independent oracle: direct fsum of the truncated series at lambda=1
        expected = math.fsum(math.exp(-2.0) * 2.0 ** k / math.factorial(k) for k in range(8))
        curve = classic_filter_curve("hkpr", np.array([1.0]), {"alpha": 2.0, "K": 7})
        assert curve.values[0] == pytest.approx(expected, abs=1e-12)
        assert curve.values[0] == pytest.approx(0.9989, abs=1e-4)

    def test_gnn_lf_singularity_skipped(self):
        # denominator 1 - 11.25 (1 - lambda) vanishes inside the domain
        curve = classic_filter_curve("gnn_lf", default_grid(2251), {"alpha": 0.1, "beta": 0.75})
        assert curve.skipped_lambdas
        assert np.all(np.isfinite(curve.values))

    def test_gegenbauer_curve_matches_scalar(self):
        curve = classic_filter_curve("gegenbauer", hyperparameters={"alpha": 1.5, "k": 3})
        ref = gegenbauer_scalar(curve.lambdas, 3, GegenbauerParams(alpha=1.5))
        assert np.allclose(curve.values, ref)

    def test_unknown_name(self):
        with pytest.raises(ValueError):
            classic_filter_curve("mystery", hyperparameters={})

    def test_missing_hyperparameter(self):
        with pytest.raises(ValueError, match="missing"):
            classic_filter_curve("ppr", hyperparameters={"K": 7})

    def test_study_set_complete(self):
        names = [c.name for c in study_curves()]
        assert names == ["k_hop", "ppr", "hkpr", "gnn_lf", "gnn_hf", "gegenbauer"]

    def test_csv_serialization(self, tmp_path):
        curve = classic_filter_curve("k_hop", np.array([-1.0, 0.0, 1.0]), {"K": 2})
        path = tmp_path / "curve.csv"
        curve.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "lambda,value"
        assert len(lines) == 4
        assert float(lines[1].split(",")[1]) == 1.0

    def test_strictly_increasing_lambda_invariant(self):
        with pytest.raises(ValueError, match="increasing"):
            FilterCurve(name="k_hop", hyperparameters={},
                        lambdas=np.array([0.0, 0.0]), values=np.array([1.0, 1.0]))


class TestProximity:
    def test_common_neighbors_toy(self, toy_matrices):
        a_tilde = symmetrize(toy_matrices.a_all)
        prox = proximity_matrix("common_neighbors", a_tilde)
        assert prox[0, 1] == pytest.approx(1.0)  # u1 and u2 share v2

    def test_k_hop_even_walk_on_edge(self):
        a = sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
        prox = proximity_matrix("k_hop", a, {"K": 2})
        assert np.allclose(prox, np.eye(2))

    def test_series_vs_spectral_forms(self):
        for seed in range(10):
            g = random_graph(14, 16, 80, seed=seed)
            a_hat = normalize_adjacency(symmetrize(build_sign_matrices(g).a_all))
            for name, hyper in (("ppr", {"alpha": 0.5, "K": 20}),
                                ("hkpr", {"alpha": 2.0, "K": 20}),
                                ("k_hop", {"K": 3})):
                series = proximity_matrix(name, a_hat, hyper)
                # recompute the spectral route independently here
                pairs = dense_eig(a_hat)
                lam = pairs.values
                if name == "ppr":
                    f = sum((1 - 0.5) * 0.5 ** k * lam ** k for k in range(21))
                elif name == "hkpr":
                    f = sum(math.exp(-2.0) * 2.0 ** k / math.factorial(k) * lam ** k
                            for k in range(21))
                else:
                    f = lam ** 3
                spectral = (pairs.vectors * f) @ pairs.vectors.T
                assert np.linalg.norm(series - spectral) < 1e-6

    def test_ceiling(self):
        with pytest.raises(ValueError, match="limited"):
            proximity_matrix("k_hop", sp.eye(10, format="csr"), {"K": 2}, max_size=5)
