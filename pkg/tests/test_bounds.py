import math

import numpy as np
import pytest

from steinpairs.bounds import (nonsmooth_class_bound, lambda_weights, triangular_weight_cap,
                               covariance_comparison_bound, smooth_function_bound, univariate_remainder_bound)
from steinpairs.errors import (DegenerateBoundError, NotPSDError,
                               NotTriangularError, SingularMatrixError,
                               ZeroDiagonalError)
from steinpairs.estimators import EXACT, Estimate


def exact(v):
    return Estimate(float(v), 0.0, EXACT, 1)


class TestLambdaWeights:
    def test_identity(self):
        assert np.array_equal(lambda_weights(np.eye(4)), np.ones(4))

    def test_two_by_two_closed_form(self):
        p, n = 0.5, 10
        lam = np.array([[1.0, 0.0], [-2 * p, 2.0]]) / n
        w = lambda_weights(lam)
        assert np.allclose(w, [n * (1 + p), n / 2], atol=1e-10)

    def test_runs_triangular_cap(self):
        from steinpairs.runs import RunsConfig, runs_lambda

        for p in (0.2, 0.5, 0.8):
            cfg = RunsConfig(30, 3, p)
            w = lambda_weights(runs_lambda(cfg))
            assert w.max() <= 15.0 * cfg.n_seq / cfg.d

    def test_singular(self):
        with pytest.raises(SingularMatrixError):
            lambda_weights(np.zeros((2, 2)))


class TestTheorem21:
    def test_all_zero(self):
        rep = smooth_function_bound(exact(0), exact(0), exact(0), (1, 1, 1), np.eye(2))
        assert rep.total == 0.0

    def test_corollary_22_shape(self):
        # assembled ingredients reproduce (d/sqrt(n)) (sqrt(g)/4 h2 + 2b/3 h3)
        d, n, beta, gamma = 3, 50, 1.2, 0.7
        A = d * d * n * math.sqrt(gamma / (n ** 3 * d * d))
        B = d * d * n * 8.0 * beta / (d * n ** 1.5)
        h = (0.5, 2.0, 3.0)
        rep = smooth_function_bound(exact(A), exact(B), exact(0), h, np.eye(d))
        expect = d / math.sqrt(n) * (math.sqrt(gamma) / 4 * h[1] + 2 * beta / 3 * h[2])
        assert abs(rep.total - expect) <= 1e-12 * expect

    def test_rademacher_special_case(self):
        d, n = 2, 100
        B = d * d * n * 8.0 / (d * n ** 1.5)
        rep = smooth_function_bound(exact(0), exact(B), exact(0), (1, 1, 1), np.eye(d))
        assert abs(rep.total - 2 * d / (3 * math.sqrt(n))) <= 1e-14

    def test_monotone_in_each_ingredient(self, rng):
        sigma = np.eye(2)
        base = smooth_function_bound(exact(1.0), exact(1.0), exact(1.0),
                               (1.0, 1.0, 1.0), sigma).total
        for bump in ((2, 1, 1), (1, 2, 1), (1, 1, 2)):
            rep = smooth_function_bound(exact(bump[0]), exact(bump[1]), exact(bump[2]),
                                  (1.0, 1.0, 1.0), sigma)
            assert rep.total >= base
        for hb in ((2, 1, 1), (1, 2, 1), (1, 1, 2)):
            rep = smooth_function_bound(exact(1.0), exact(1.0), exact(1.0), hb, sigma)
            assert rep.total >= base

    def test_total_recomputable(self):
        rep = smooth_function_bound(exact(0.3), exact(0.2), exact(0.1),
                              (1.0, 2.0, 3.0), 2.0 * np.eye(3))
        assert rep.total == rep.recompute_total()

    def test_negative_ingredient_rejected(self):
        with pytest.raises(ValueError):
            smooth_function_bound(exact(-1), exact(0), exact(0), (1, 1, 1), np.eye(2))


class TestCorollary31:
    def test_arithmetic_example(self):
        rep = nonsmooth_class_bound(0.0, 2.0, 0.0, a=1.0, d=3, gamma_d=1.0)
        assert rep.D_prime == 0.0
        assert rep.T_prime == 1.0
        assert abs(rep.total - 2.0) <= 1e-14
        assert rep.t_prime_ge_one

    def test_gamma_scaling(self):
        rep = nonsmooth_class_bound(0.0, 2.0, 0.0, a=1.0, d=3, gamma_d=2.0)
        assert abs(rep.total - 8.0) <= 1e-14

    def test_degenerate(self):
        with pytest.raises(DegenerateBoundError):
            nonsmooth_class_bound(0.0, 0.0, 0.0, a=1.5, d=2)

    def test_convex_class_constant(self):
        d = 4
        rep = nonsmooth_class_bound(0.1, 0.1, 0.01, a=2.0 * math.sqrt(d), d=d)
        assert rep.a == 2.0 * math.sqrt(d)
        assert rep.total > 0.0

    def test_a_below_one_rejected(self):
        with pytest.raises(ValueError):
            nonsmooth_class_bound(0.1, 0.1, 0.1, a=0.5, d=2)

    @pytest.mark.parametrize("terms", [(0.05, 0.02, 0.001), (0.3, 0.1, 0.0),
                                       (0.0, 0.4, 0.02)])
    def test_t_prime_minimizes_objective(self, terms):
        A, B, C = terms
        d, a = 3, 4.0
        rep = nonsmooth_class_bound(A, B, C, a=a, d=d)
        D = rep.D_prime

        def objective(t):
            return D * math.log(1.0 / t) + 0.5 * B / math.sqrt(t) + a * math.sqrt(t)

        if rep.T_prime < 1.0:
            grid = np.linspace(1e-6, 1.0 - 1e-9, 200_000)
            vals = np.array([objective(t) for t in grid])
            assert objective(rep.T_prime) <= vals.min() + 1e-6


class TestProp28:
    def test_equal_covariances(self):
        s = np.array([[2.0, 0.3], [0.3, 1.0]])
        assert covariance_comparison_bound(s, s, h2=5.0) == 0.0

    def test_rank_one_target(self):
        assert abs(covariance_comparison_bound(np.eye(2), np.ones((2, 2)), 1.0) - 1.0) <= 1e-14

    def test_diagonal_example(self):
        assert abs(covariance_comparison_bound(np.eye(2), np.diag([1.0, 0.5]), 2.0) - 0.5) <= 1e-14

    def test_not_psd(self):
        with pytest.raises(NotPSDError):
            covariance_comparison_bound(np.eye(2), np.diag([1.0, -0.5]), 1.0)


class TestUnivariate:
    def test_zero(self):
        assert univariate_remainder_bound(0.5, 0, 0, 0) == 0.0

    def test_arithmetic_example(self):
        val = univariate_remainder_bound(0.01, 1e-6, 1e-6, 0.0)
        assert abs(val - 0.66) <= 1e-12

    def test_unremoved_remainder_diverges(self):
        # remainder variance of the same order as lambda^2 * Var statistic:
        # the bound grows with n instead of vanishing
        def bound(n):
            lam = 2.0 / n
            var_v2 = 0.4 * n          # statistic variance grows linearly
            var_r = (lam ** 2) * var_v2
            return univariate_remainder_bound(lam, 0.0, 0.0, var_r)

        assert bound(400) > bound(100) > 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            univariate_remainder_bound(0.0, 1, 1, 1)
        with pytest.raises(ValueError):
            univariate_remainder_bound(1.0, -1, 1, 1)


class TestLemmaB1:
    def test_diagonal_case(self):
        assert triangular_weight_cap(3.0 * np.eye(4), a=0.0) == pytest.approx(1.0 / 3.0)

    def test_runs_scaled_matrix(self):
        from steinpairs.runs import RunsConfig, runs_lambda

        cfg = RunsConfig(30, 3, 0.5)
        n_lam = cfg.n_seq * runs_lambda(cfg)
        cap = triangular_weight_cap(n_lam, a=2.0)
        assert abs(cap - 2.0) <= 1e-12          # (2/2 + 1)^2 / 2
        w = lambda_weights(runs_lambda(cfg))
        assert w.max() <= cap * cfg.n_seq
        assert cap * cfg.n_seq <= 15.0 * cfg.n_seq / cfg.d

    def test_random_triangular_seed3(self):
        rng = np.random.default_rng(3)
        L = np.tril(rng.uniform(-1.0, 1.0, (5, 5)), k=-1)
        np.fill_diagonal(L, rng.uniform(0.5, 2.0, 5) * rng.choice([-1, 1], 5))
        a = float(np.abs(np.tril(L, k=-1)).max())
        assert triangular_weight_cap(L, a=a) >= lambda_weights(L).max()

    def test_property_thousand_matrices(self):
        rng = np.random.default_rng(99)
        for _ in range(1000):
            d = int(rng.integers(1, 9))
            L = np.tril(rng.uniform(-1.0, 1.0, (d, d)), k=-1)
            np.fill_diagonal(L, rng.uniform(0.3, 2.5, d) * rng.choice([-1, 1], d))
            a = float(np.abs(np.tril(L, k=-1)).max(initial=0.0))
            assert triangular_weight_cap(L, a=a) >= lambda_weights(L).max() - 1e-9

    def test_errors(self):
        with pytest.raises(NotTriangularError):
            triangular_weight_cap(np.array([[1.0, 0.5], [0.0, 1.0]]), a=1.0)
        with pytest.raises(ZeroDiagonalError):
            triangular_weight_cap(np.array([[1.0, 0.0], [0.5, 0.0]]), a=1.0)
        with pytest.raises(ValueError):
            triangular_weight_cap(np.array([[1.0, 0.0], [5.0, 1.0]]), a=1.0)
