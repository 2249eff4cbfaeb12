import math
from dataclasses import replace

import numpy as np
import pytest

from steinpairs.errors import NoFineConditionalError
from steinpairs.estimators import (EXACT, MONTE_CARLO, Estimate, cond_variance,
                                   cond_variance_by_statistic, third_abs_moment,
                                   var_R)
from steinpairs.pairs import PairModel, estimate_linearity
from steinpairs.permutations import mww_tensor, perm_pair_model
from steinpairs.runs import RunsConfig, runs_pair_model
from steinpairs.zoo import IidSumConfig, iid_pair


def constant_profile_model(value=0.25, dim=2):
    def fine_sample(rng, size):
        return np.zeros(size)

    def fine_profile(configs):
        return np.full((len(configs), 3, dim), value)

    return PairModel(
        dim=dim,
        sample_configs=fine_sample,
        statistic=lambda c: np.zeros((len(c), dim)),
        step=lambda c, rng: c,
        fine_sample=fine_sample,
        fine_profile=fine_profile,
    )


class TestEstimateType:
    def test_mode_validation(self):
        with pytest.raises(ValueError):
            Estimate(1.0, 0.1, "guesswork", 10)

    def test_zero_se_reserved_for_enumeration(self):
        with pytest.raises(ValueError):
            Estimate(1.0, 0.0, MONTE_CARLO, 10)
        with pytest.raises(ValueError):
            Estimate(1.0, 0.1, EXACT, 10)
        Estimate(1.0, 0.0, EXACT, 10)


class TestCondVariance:
    def test_constant_product_zero_variance(self):
        est = cond_variance(constant_profile_model(), 0, 1, 500, seed=0)
        assert est.value == 0.0

    def test_runs_enumeration_under_envelope(self):
        cfg = RunsConfig(10, 2, 0.5)
        model = runs_pair_model(cfg)
        est = cond_variance(model, 1, 1, 1000, seed=0)
        assert est.mode == EXACT
        envelope = 768 * cfg.d ** 5 / (cfg.n_seq ** 3 * cfg.p ** 2 * (1 - cfg.p) ** 2)
        assert 0.0 < est.value <= envelope

    def test_monte_carlo_matches_enumeration(self):
        cfg = RunsConfig(10, 2, 0.5)
        model = runs_pair_model(cfg)
        exact = cond_variance(model, 1, 1, 0, seed=0)
        mc = cond_variance(model, 1, 1, 100_000, seed=1, force_monte_carlo=True)
        assert mc.mode == MONTE_CARLO
        assert abs(mc.value - exact.value) <= 5.0 * mc.std_error

    def test_requires_fine_hooks(self):
        model = replace(runs_pair_model(RunsConfig(8, 2, 0.5)), fine_profile=None)
        with pytest.raises(NoFineConditionalError):
            cond_variance(model, 0, 0, 100, seed=0)

    def test_fine_surrogate_dominates_statistic_conditioning(self):
        # conditioning on the full configuration can only increase the variance
        for factory in (lambda: runs_pair_model(RunsConfig(8, 2, 0.4)),
                        lambda: iid_pair(IidSumConfig(2, 4, "bernoulli", q=0.3)),
                        lambda: perm_pair_model(mww_tensor(3, 3))):
            model = factory()
            for i in range(model.dim):
                fine = cond_variance(model, i, i, 0, seed=0)
                coarse = cond_variance_by_statistic(model, i, i)
                assert coarse.mode == EXACT
                assert coarse.value <= fine.value + 1e-12

    def test_statistic_conditioning_needs_enumeration(self):
        model = replace(runs_pair_model(RunsConfig(8, 2, 0.5)), fine_enum=None)
        with pytest.raises(NoFineConditionalError):
            cond_variance_by_statistic(model, 0, 0)


class TestThirdAbsMoment:
    def test_iid_distinct_coordinates_exactly_zero(self):
        model = iid_pair(IidSumConfig(2, 12))
        est = third_abs_moment(model, 0, 0, 1, 2_000, seed=3, force_monte_carlo=True)
        assert est.value == 0.0

    def test_rademacher_diagonal_envelope(self):
        cfg = IidSumConfig(2, 16)
        model = iid_pair(cfg)
        est = third_abs_moment(model, 0, 0, 0, 40_000, seed=4, force_monte_carlo=True)
        cap = 8.0 * cfg.beta / (cfg.d * cfg.n ** 1.5)
        assert est.value <= cap + 5.0 * est.std_error

    def test_runs_enumeration_under_envelope(self):
        cfg = RunsConfig(10, 2, 0.5)
        model = runs_pair_model(cfg)
        est = third_abs_moment(model, 1, 1, 1, 0, seed=0)
        assert est.mode == EXACT
        cap = (64 * cfg.d ** 3 * cfg.p ** 2
               / (cfg.n_seq ** 1.5 * cfg.p ** 3 * (1 - cfg.p) ** 1.5))
        assert 0.0 < est.value <= cap
        mc = third_abs_moment(model, 1, 1, 1, 60_000, seed=5, force_monte_carlo=True)
        assert abs(mc.value - est.value) <= 5.0 * mc.std_error


class TestEnumerationMonteCarloAgreement:
    """Both estimator backends agree on every enumerable zoo model."""

    @pytest.mark.parametrize("factory,indices", [
        (lambda: runs_pair_model(RunsConfig(8, 2, 0.4)), (1, 1)),
        (lambda: iid_pair(IidSumConfig(2, 4, "bernoulli", q=0.35)), (0, 0)),
        (lambda: perm_pair_model(mww_tensor(3, 3)), (0, 0)),
    ])
    def test_cond_variance_agreement(self, factory, indices):
        model = factory()
        assert model.fine_space_size <= 1 << 16
        exact = cond_variance(model, *indices, 0, seed=0)
        mc = cond_variance(model, *indices, 40_000, seed=6, force_monte_carlo=True)
        assert abs(mc.value - exact.value) <= 5.0 * mc.std_error

    @pytest.mark.parametrize("factory,indices", [
        (lambda: runs_pair_model(RunsConfig(8, 2, 0.4)), (1, 1, 1)),
        (lambda: iid_pair(IidSumConfig(2, 4, "rademacher")), (0, 0, 0)),
        (lambda: perm_pair_model(mww_tensor(3, 3)), (0, 1, 2)),
    ])
    def test_third_moment_agreement(self, factory, indices):
        model = factory()
        exact = third_abs_moment(model, *indices, 0, seed=0)
        mc = third_abs_moment(model, *indices, 40_000, seed=7, force_monte_carlo=True)
        assert abs(mc.value - exact.value) <= 5.0 * mc.std_error

    def test_nonnegativity(self):
        model = runs_pair_model(RunsConfig(9, 3, 0.3))
        for i in range(3):
            for j in range(i, 3):
                assert cond_variance(model, i, j, 0, seed=0).value >= 0.0
        assert third_abs_moment(model, 0, 1, 2, 0, seed=0).value >= 0.0


class TestVarR:
    def test_runs_zero_remainder(self):
        model = runs_pair_model(RunsConfig(10, 2, 0.5))
        fit = estimate_linearity(model, 4_000, seed=8)
        assert var_R(fit).max() <= 1e-20

    def test_two_runs_without_embedding_has_remainder(self):
        cfg = RunsConfig(12, 2, 0.5)
        model = runs_pair_model(cfg, standardize=False, coords=(2,))
        fit = estimate_linearity(model, 6_000, seed=9)
        vr = float(var_R(fit)[0])
        # remainder variance does not vanish relative to the statistic variance
        from steinpairs.runs import runs_cross_moment

        var_v2 = runs_cross_moment(cfg, 2, 2)
        assert vr > 1e-3 * var_v2 / cfg.n_seq

    def test_mww_remainder_matches_claimed_regression(self):
        tensor = mww_tensor(4, 4)
        n = tensor.n
        model = perm_pair_model(tensor)
        fit = estimate_linearity(model, 4_000, seed=10, against_claimed=True)
        lam = 2.0 / (n - 1)
        target = (lam / n) ** 2 * (tensor.n_x * tensor.n_y * (n + 1) / 12.0)
        vr = float(var_R(fit)[0])
        # variance-of-variance tolerance: ~5 relative standard errors
        rel_se = math.sqrt(2.0 / fit.n_samples) * 3.0
        assert abs(vr - target) <= 5.0 * rel_se * target
        assert var_R(fit)[1:].max() <= 1e-18
