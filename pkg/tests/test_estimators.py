"""Point estimators: exact unbiasedness oracles, equivalences, invariances."""

import math

import numpy as np
import pytest

from randadjust.design import RawCovariates, center_and_reduce
from randadjust.errors import (
    ArmRankDeficient,
    ArmTooSmall,
    DimensionMismatch,
)
from randadjust.estimators import (
    adjusted_estimate,
    debiased_estimate,
    diff_in_means,
    fit_arm,
    generic_adjusted,
    lin_interacted,
    observe,
)
from randadjust.population import PotentialOutcomes, population_ols
from randadjust.randomization import Assignment, RngStream, enumerate_assignments, sample_assignment


def _design(n, p, seed):
    rng = np.random.default_rng(seed)
    return center_and_reduce(RawCovariates(rng.standard_normal((n, p))))


def _population(n, p, seed):
    rng = np.random.default_rng(seed)
    d = _design(n, p, seed)
    po = PotentialOutcomes(
        rng.standard_normal(n) + 0.8, rng.standard_normal(n) - 0.2
    )
    return d, po


class TestDiffInMeans:
    def test_constant_outcomes(self):
        d, _ = _population(8, 1, 0)
        po = PotentialOutcomes(np.full(8, 3.0), np.full(8, 3.0))
        a = Assignment(treated=np.array([0, 2, 4]), n=8)
        assert diff_in_means(observe(po, a, d)) == pytest.approx(0.0)

    def test_small_arithmetic(self):
        d = _design(4, 1, 1)
        po = PotentialOutcomes(np.array([1.0, 3.0, 9.0, 9.0]), np.array([9.0, 9.0, 0.0, 2.0]))
        a = Assignment(treated=np.array([0, 1]), n=4)
        # treated values (1, 3); control values (0, 2)
        assert diff_in_means(observe(po, a, d)) == pytest.approx(1.0)

    def test_exactly_unbiased_over_enumeration(self):
        d, po = _population(7, 2, 2)
        vals = [diff_in_means(observe(po, a, d)) for a in enumerate_assignments(7, 3)]
        assert np.mean(vals) == pytest.approx(po.tau, abs=1e-12)

    def test_neyman_variance_over_enumeration(self):
        d, po = _population(8, 2, 3)
        n, n1 = 8, 4
        vals = np.array([diff_in_means(observe(po, a, d)) for a in enumerate_assignments(n, n1)])
        s1 = po.y1.var(ddof=1)
        s0 = po.y0.var(ddof=1)
        st = (po.y1 - po.y0).var(ddof=1)
        want = s1 / n1 + s0 / (n - n1) - st / n
        assert vals.var(ddof=0) == pytest.approx(want, abs=1e-10)


class TestGenericAdjusted:
    def test_zero_coefficients_match_diff_in_means(self):
        d, po = _population(10, 3, 4)
        a = sample_assignment(10, 5, RngStream(5))
        obs = observe(po, a, d)
        assert generic_adjusted(obs, np.zeros(3), np.zeros(3)) == pytest.approx(
            diff_in_means(obs)
        )

    def test_exactly_unbiased_for_fixed_coefficients(self):
        d, po = _population(7, 2, 6)
        rng = np.random.default_rng(7)
        for _ in range(5):
            b1, b0 = rng.standard_normal(2), rng.standard_normal(2)
            vals = [
                generic_adjusted(observe(po, a, d), b1, b0)
                for a in enumerate_assignments(7, 3)
            ]
            assert np.mean(vals) == pytest.approx(po.tau, abs=1e-12)

    def test_population_coefficients_shrink_variance(self):
        # strongly predictive covariates: population OLS coefficients beat zero
        rng = np.random.default_rng(8)
        d = _design(8, 1, 8)
        signal = d.x @ np.array([4.0])
        po = PotentialOutcomes(signal + 0.1 * rng.standard_normal(8),
                               signal + 0.1 * rng.standard_normal(8))
        pols = population_ols(d, po)
        unadj, adj = [], []
        for a in enumerate_assignments(8, 4):
            obs = observe(po, a, d)
            unadj.append(diff_in_means(obs))
            adj.append(generic_adjusted(obs, pols.beta1, pols.beta0))
        assert np.var(adj) <= np.var(unadj)

    def test_dimension_mismatch(self):
        d, po = _population(10, 2, 9)
        obs = observe(po, sample_assignment(10, 5, RngStream(10)), d)
        with pytest.raises(DimensionMismatch):
            generic_adjusted(obs, np.zeros(3), np.zeros(2))


class TestFitArm:
    def test_exact_linear_outcomes_zero_residuals(self):
        d = _design(20, 3, 11)
        beta = np.array([1.0, -1.0, 2.0])
        po = PotentialOutcomes(2.0 + d.x @ beta, -1.0 + d.x @ beta)
        a = sample_assignment(20, 10, RngStream(12))
        fit1 = fit_arm(observe(po, a, d), 1)
        np.testing.assert_allclose(fit1.resid, 0.0, atol=1e-9)
        np.testing.assert_allclose(fit1.beta_hat, beta, atol=1e-9)

    def test_intercept_only_when_no_covariates(self):
        # p = 0 design: the fit reduces to the arm mean
        empty = np.empty((12, 0))
        q, r = np.linalg.qr(empty)
        from randadjust.design import DesignMatrix

        d = DesignMatrix(
            x=empty, leverages=np.zeros(12), kappa=0.0, orthonormal=True,
            kept_columns=(), q_factor=q, r_factor=r,
        )
        rng = np.random.default_rng(13)
        po = PotentialOutcomes(rng.standard_normal(12), rng.standard_normal(12))
        a = sample_assignment(12, 6, RngStream(14))
        obs = observe(po, a, d)
        fit1 = fit_arm(obs, 1)
        assert fit1.mu_hat == pytest.approx(np.mean(obs.y_obs[a.treated]))
        np.testing.assert_allclose(
            fit1.resid, obs.y_obs[a.treated] - fit1.mu_hat, atol=1e-12
        )

    def test_residuals_orthogonal_to_arm_columns(self):
        d, po = _population(30, 4, 15)
        a = sample_assignment(30, 15, RngStream(16))
        obs = observe(po, a, d)
        for arm in (0, 1):
            fit = fit_arm(obs, arm)
            idx = a.treated if arm == 1 else a.control
            z = np.column_stack([np.ones(idx.size), d.x[idx]])
            scale = max(1.0, np.abs(fit.resid).max())
            assert np.abs(z.T @ fit.resid).max() <= 1e-8 * scale * idx.size
            assert fit.arm_leverages.min() >= 0.0
            assert fit.arm_leverages.max() <= 1.0

    def test_intercept_shift_identity(self):
        # the fitted intercept equals the population intercept plus a ratio of
        # residual means adjusted by the arm-only hat matrix
        rng = np.random.default_rng(17)
        for trial in range(50):
            n = 24
            d = _design(n, 2, 100 + trial)
            po = PotentialOutcomes(rng.standard_normal(n), rng.standard_normal(n))
            pols = population_ols(d, po)
            a = sample_assignment(n, 12, RngStream(trial))
            obs = observe(po, a, d)
            fit1 = fit_arm(obs, 1)
            idx = a.treated
            x_t = d.x[idx]
            h_t = x_t @ np.linalg.solve(x_t.T @ x_t, x_t.T)
            e_t = pols.e1[idx]
            ones = np.ones(idx.size)
            n_t = idx.size
            num = ones @ e_t / n_t - ones @ h_t @ e_t / n_t
            den = 1.0 - ones @ h_t @ ones / n_t
            assert fit1.mu_hat == pytest.approx(pols.mu1 + num / den, abs=1e-9)

    def test_arm_too_small(self):
        d, po = _population(12, 4, 18)
        a = Assignment(treated=np.array([0, 1, 2, 3, 4]), n=12)  # n1 = 5 < p + 2
        with pytest.raises(ArmTooSmall):
            fit_arm(observe(po, a, d), 1)

    def test_arm_rank_deficient(self):
        # second column doubles the first on the treated rows only
        col_a = np.array([1.0, 2.0, 3.0, 1.5, -2.0, 0.5, 1.0, -1.0, 2.5, 0.0])
        col_b = col_a.copy()
        col_b[:5] = 2.0 * col_a[:5]
        raw = RawCovariates(np.column_stack([col_a, col_b]))
        d = center_and_reduce(raw)
        assert d.p == 2
        po = PotentialOutcomes(np.arange(10.0), np.zeros(10))
        a = Assignment(treated=np.arange(5), n=10)
        # centering shifts columns by constants; with an intercept in the fit
        # the treated block is still collinear
        with pytest.raises(ArmRankDeficient):
            fit_arm(observe(po, a, d), 1)


class TestAdjustedAndDebiased:
    def test_exact_linear_recovers_tau_every_assignment(self):
        d = _design(9, 2, 19)
        beta = np.array([1.0, 2.0])
        po = PotentialOutcomes(3.0 + d.x @ beta, 1.0 + d.x @ beta)
        for a in enumerate_assignments(9, 4):
            obs = observe(po, a, d)
            tau_hat = adjusted_estimate(fit_arm(obs, 1), fit_arm(obs, 0))
            assert tau_hat == pytest.approx(po.tau, abs=1e-9)

    def test_debiased_equals_adjusted_when_residuals_vanish(self):
        d = _design(16, 2, 20)
        beta = np.array([0.5, -1.0])
        po = PotentialOutcomes(d.x @ beta + 2.0, d.x @ beta)
        a = sample_assignment(16, 8, RngStream(21))
        obs = observe(po, a, d)
        pts = debiased_estimate(fit_arm(obs, 1), fit_arm(obs, 0), d)
        assert pts.tau_adj_de == pytest.approx(pts.tau_adj, abs=1e-9)
        assert pts.delta_hat1 == pytest.approx(0.0, abs=1e-10)

    def test_univariate_correction_formula(self):
        # p=1: the correction must match an independently coded scalar formula
        rng = np.random.default_rng(22)
        d, po = _population(40, 1, 23)
        a = sample_assignment(40, 16, RngStream(24))
        obs = observe(po, a, d)
        fit1, fit0 = fit_arm(obs, 1), fit_arm(obs, 0)
        pts = debiased_estimate(fit1, fit0, d)

        lev = d.leverages
        n1, n0 = fit1.n_arm, fit0.n_arm
        dh1 = float(np.sum(fit1.resid * lev[a.treated])) / n1
        dh0 = float(np.sum(fit0.resid * lev[a.control])) / n0
        scalar_form = (fit1.mu_hat - fit0.mu_hat) - (n1 / n0 * dh0 - n0 / n1 * dh1)
        assert pts.tau_adj_de == pytest.approx(scalar_form, rel=1e-12)
        assert pts.delta_hat1 == pytest.approx(dh1, rel=1e-12)

    def test_point_estimate_consistency_fields(self):
        d, po = _population(30, 3, 25)
        a = sample_assignment(30, 12, RngStream(26))
        obs = observe(po, a, d)
        fit1, fit0 = fit_arm(obs, 1), fit_arm(obs, 0)
        pts = debiased_estimate(fit1, fit0, d)
        n1, n0 = a.n1, a.n0
        assert pts.tau_adj_de == pytest.approx(
            pts.tau_adj - (n1 / n0 * pts.delta_hat0 - n0 / n1 * pts.delta_hat1)
        )
        assert pts.tau_unadj == pytest.approx(diff_in_means(obs))


class TestLinInteracted:
    def test_matches_two_step_on_random_instances(self):
        rng = np.random.default_rng(27)
        for trial in range(60):
            n = 40
            p = int(rng.integers(1, 5))
            d = _design(n, p, 300 + trial)
            po = PotentialOutcomes(rng.standard_normal(n), rng.standard_normal(n))
            a = sample_assignment(n, 20, RngStream(trial, 5))
            obs = observe(po, a, d)
            two_step = adjusted_estimate(fit_arm(obs, 1), fit_arm(obs, 0))
            one_step = lin_interacted(obs)
            assert one_step == pytest.approx(two_step, rel=1e-8, abs=1e-10)

    def test_exact_linear(self):
        d = _design(12, 2, 28)
        beta = np.array([1.0, 1.0])
        po = PotentialOutcomes(d.x @ beta + 5.0, d.x @ beta + 1.0)
        a = sample_assignment(12, 6, RngStream(29))
        assert lin_interacted(observe(po, a, d)) == pytest.approx(4.0, abs=1e-9)


class TestTransformationInvariance:
    def test_all_estimates_invariant_under_column_transform(self):
        rng = np.random.default_rng(30)
        n, p = 40, 3
        data = rng.standard_normal((n, p))
        po = PotentialOutcomes(rng.standard_normal(n), rng.standard_normal(n))
        a = sample_assignment(n, 16, RngStream(31))

        def all_stats(mat):
            d = center_and_reduce(RawCovariates(mat))
            obs = observe(po, a, d)
            fit1, fit0 = fit_arm(obs, 1), fit_arm(obs, 0)
            pts = debiased_estimate(fit1, fit0, d)
            return np.array([pts.tau_unadj, pts.tau_adj, pts.tau_adj_de,
                             pts.delta_hat1, pts.delta_hat0])

        base = all_stats(data)
        for _ in range(20):
            a_mat = rng.standard_normal((p, p))
            while abs(np.linalg.det(a_mat)) < 1e-3:
                a_mat = rng.standard_normal((p, p))
            transformed = all_stats(data @ a_mat)
            np.testing.assert_allclose(transformed, base, rtol=1e-8, atol=1e-10)

    def test_invariant_under_orthonormalization(self):
        from randadjust.design import orthonormalize

        rng = np.random.default_rng(32)
        n = 20
        d = _design(n, 3, 33)
        po = PotentialOutcomes(rng.standard_normal(n), rng.standard_normal(n))
        a = sample_assignment(n, 10, RngStream(34))
        obs_raw = observe(po, a, d)
        obs_on = observe(po, a, orthonormalize(d))
        fits_raw = (fit_arm(obs_raw, 1), fit_arm(obs_raw, 0))
        fits_on = (fit_arm(obs_on, 1), fit_arm(obs_on, 0))
        assert adjusted_estimate(*fits_on) == pytest.approx(
            adjusted_estimate(*fits_raw), abs=1e-9
        )
        # fitted residuals are a function of the column space only
        for raw, on in zip(fits_raw, fits_on):
            np.testing.assert_allclose(on.resid, raw.resid, atol=1e-9)
