import math

import numpy as np
import pytest

from steinpairs.pairs import (estimate_linearity, moment_swap_test,
                              sigma_tilde, step_covariance)
from steinpairs.util import batch_means_se
from steinpairs.zoo import (IidSumConfig, SpinChainConfig, default_burn_in,
                            iid_bound, iid_bound_display, iid_pair,
                            spin_chain_lambda, spin_chain_pair_moment,
                            spin_chain_step, spin_equilibrium, spin_sum_pair)


class TestIidLaws:
    @pytest.mark.parametrize("law,q", [("rademacher", 0.5), ("bernoulli", 0.3),
                                       ("bernoulli", 0.5), ("uniform", 0.5)])
    def test_closed_form_moments(self, law, q):
        cfg = IidSumConfig(1, 9, law, q=q)
        n = cfg.n
        # independent re-derivation of the scaled moments
        if law == "rademacher":
            third = n ** -1.5
            var_sq = 0.0
        elif law == "bernoulli":
            s = math.sqrt(n * q * (1 - q))
            third = (q * (1 - q) ** 3 + (1 - q) * q ** 3) / s ** 3
            var_sq = (q * (1 - q) ** 2 / s ** 2 - (q * (1 - q) / s ** 2) ** 2 * 0)
            vals = np.array([(1 - q) ** 2, q ** 2]) / s ** 2
            probs = np.array([q, 1 - q])
            m = probs @ vals
            var_sq = probs @ (vals - m) ** 2
        else:
            a = math.sqrt(3.0 / n)
            third = a ** 3 / 4.0
            var_sq = a ** 4 * (1.0 / 5.0 - 1.0 / 9.0)
        assert cfg.beta * n ** -1.5 == pytest.approx(third, rel=1e-12)
        assert cfg.gamma * n ** -2.0 == pytest.approx(var_sq, abs=1e-12)

    def test_variance_is_one_over_n(self, rng):
        for law in ("rademacher", "bernoulli", "uniform"):
            cfg = IidSumConfig(1, 13, law, q=0.25)
            model = iid_pair(cfg)
            draws = model.sample_configs(rng, 30_000).ravel()
            se = draws.var() * math.sqrt(2.0 / draws.size)
            assert abs(draws.var() - 1.0 / cfg.n) <= 5 * se + 1e-6

    def test_config_validation(self):
        with pytest.raises(ValueError):
            IidSumConfig(2, 10, "cauchy")
        with pytest.raises(ValueError):
            IidSumConfig(0, 10)
        with pytest.raises(ValueError):
            IidSumConfig(2, 10, "bernoulli", q=1.0)


class TestIidPair:
    def test_linearity_recovery(self):
        cfg = IidSumConfig(3, 12)
        fit = estimate_linearity(iid_pair(cfg), 4_000, seed=0)
        target = np.eye(3) / (cfg.d * cfg.n)
        assert np.all(np.abs(fit.lambda_hat - target)
                      <= 5 * fit.standard_errors + 1e-8)

    def test_exchangeable_swap(self):
        model = iid_pair(IidSumConfig(2, 15))
        assert max(abs(m.zscore) for m in moment_swap_test(model, 30_000, seed=1)) <= 4.0

    def test_bound_closed_form_all_laws(self):
        h = (0.7, 1.3, 2.1)
        for law in ("rademacher", "bernoulli", "uniform"):
            cfg = IidSumConfig(2, 64, law, q=0.4)
            assert iid_bound(cfg, h).total == pytest.approx(
                iid_bound_display(cfg, h), rel=1e-12)

    def test_rademacher_bound_special_case(self):
        cfg = IidSumConfig(2, 100)
        rep = iid_bound(cfg, (1.0, 1.0, 1.0))
        assert rep.total == pytest.approx(2 * cfg.d / (3 * math.sqrt(cfg.n)), rel=1e-12)
        # the curvature term vanishes for a two-point law
        assert rep.A == 0.0

    def test_bound_halves_with_four_times_n(self):
        h = (1.0, 1.0, 1.0)
        a = iid_bound(IidSumConfig(2, 50), h).total
        b = iid_bound(IidSumConfig(2, 100), h).total
        assert b == pytest.approx(a / math.sqrt(2.0), rel=1e-12)


class TestSpinChain:
    def test_config_validation(self):
        with pytest.raises(ValueError):
            SpinChainConfig(3, 10)

    def test_lambda_display_d4(self):
        lam = spin_chain_lambda(4)
        expect = 0.25 * np.array([
            [1.0, -0.5, 0.0, 0.5],
            [0.5, 1.0, -0.5, 0.0],
            [0.0, 0.5, 1.0, -0.5],
            [-0.5, 0.0, 0.5, 1.0],
        ])
        assert np.allclose(lam, expect, atol=1e-15)
        assert np.abs(lam - lam.T).max() == pytest.approx(1.0 / 4.0)

    def test_states_stay_in_hypercube(self, rng):
        x = spin_equilibrium(5, 100, rng)
        for _ in range(50):
            x = spin_chain_step(x, rng)
        assert set(np.unique(x)) <= {-1, 1}

    def test_single_step_drift_identity(self, rng):
        for d in (4, 5, 6):
            x = spin_equilibrium(d, 100, rng).astype(float)
            drift = np.zeros_like(x)
            for i in range(d):
                drift[:, i] = (0.5 * -x[:, (i - 1) % d]
                               + 0.5 * x[:, (i + 1) % d] - x[:, i]) / d
            assert np.abs(drift + x @ spin_chain_lambda(d).T).max() <= 1e-12

    def test_pair_moment_identity(self, rng):
        d = 5
        x = spin_equilibrium(d, 100, rng)
        got = spin_chain_pair_moment(x)
        for b in range(x.shape[0]):
            acc = np.zeros((d, d))
            for i in range(d):
                for val in (-x[b, (i - 1) % d], x[b, (i + 1) % d]):
                    y = x[b].astype(float).copy()
                    y[i] = val
                    acc += np.outer(y, y) / (2 * d)
            assert np.abs(acc - got[b]).max() <= 1e-12

    def test_trajectory_uncorrelated(self):
        rng = np.random.default_rng(7)
        d = 4
        state = spin_equilibrium(d, 1, rng)[0]
        steps = 10_000
        prods = np.empty((steps, d))
        for t in range(steps):
            state = spin_chain_step(state, rng)
            prods[t] = state * np.roll(state, -1)
        for i in range(d):
            se = batch_means_se(prods[:, i])
            assert abs(prods[:, i].mean()) <= 5 * se

    def test_burn_in_invariance(self):
        # uniform start is already stationary: moment batteries agree across
        # burn-in lengths (the design cross-check for the equilibrium sampler)
        d = 4
        a = spin_equilibrium(d, 20_000, np.random.default_rng(1), burn_in=0)
        b = spin_equilibrium(d, 20_000, np.random.default_rng(2),
                             burn_in=default_burn_in(d) // 10)
        for arr in (a, b):
            assert abs(arr.mean()) <= 5 / math.sqrt(arr.size)
        ca = (a[:, 0] * a[:, 1]).mean()
        cb = (b[:, 0] * b[:, 1]).mean()
        assert abs(ca - cb) <= 5 * math.sqrt(2.0 / a.shape[0])


class TestSpinSumPair:
    def test_linearity_recovery(self):
        cfg = SpinChainConfig(4, 25)
        model = spin_sum_pair(cfg)
        fit = estimate_linearity(model, 4_000, seed=3)
        target = spin_chain_lambda(4) / cfg.n
        assert np.all(np.abs(fit.lambda_hat - target)
                      <= 5 * fit.standard_errors + 1e-8)

    def test_swap_test_detects_nonexchangeability(self):
        model = spin_sum_pair(SpinChainConfig(4, 50))
        moments = moment_swap_test(model, 60_000, seed=4)
        assert max(abs(m.zscore) for m in moments) > 4.0

    def test_equal_distribution_covariance_identity(self):
        cfg = SpinChainConfig(4, 30)
        sc = step_covariance(spin_sum_pair(cfg), 50_000, seed=5)
        assert np.all(np.abs(sc.empirical - sc.equal_dist_prediction)
                      <= 5 * sc.empirical_se + 1e-12)

    def test_sigma_tilde_differs_from_identity(self):
        st = sigma_tilde(spin_chain_lambda(4), np.eye(4))
        assert np.abs(st - np.eye(4)).max() > 0.01

    def test_w_close_to_normal_despite_nonexchangeability(self):
        from steinpairs.distance import battery, distance_estimate

        cfg = SpinChainConfig(4, 200)
        model = spin_sum_pair(cfg)
        h = battery(4)[2]  # a bounded smooth function of the first coordinate
        est = distance_estimate(model, np.eye(4), h, 60_000, seed=6)
        assert abs(est.value) <= 4 * est.std_error + 0.01

    def test_stationary_cross_correlations_multiple_d(self, rng):
        for d in (4, 5, 6):
            x = spin_equilibrium(d, 30_000, rng)
            for gap in (1, 2):
                prods = (x * np.roll(x, -gap, axis=1)).mean(axis=0)
                assert np.abs(prods).max() <= 5 / math.sqrt(x.shape[0])
