"""HC variance estimators and Wald intervals."""

import numpy as np
import pytest

from randadjust.design import DesignMatrix, RawCovariates, center_and_reduce
from randadjust.errors import DegenerateDf, LeverageAtOne, NegativeVariance
from randadjust.estimators import fit_arm, observe
from randadjust.population import PotentialOutcomes
from randadjust.randomization import Assignment, RngStream, sample_assignment
from randadjust.variance import (
    hc_variance,
    variance_estimates,
    wald_interval,
)


def _design(n, p, seed):
    rng = np.random.default_rng(seed)
    return center_and_reduce(RawCovariates(rng.standard_normal((n, p))))


def _intercept_only_design(n):
    empty = np.empty((n, 0))
    q, r = np.linalg.qr(empty)
    return DesignMatrix(
        x=empty, leverages=np.zeros(n), kappa=0.0, orthonormal=True,
        kept_columns=(), q_factor=q, r_factor=r,
    )


def _fits(n=30, p=3, seed=0, n1=None):
    rng = np.random.default_rng(seed)
    d = _design(n, p, seed)
    po = PotentialOutcomes(rng.standard_normal(n), rng.standard_normal(n))
    a = sample_assignment(n, n1 or n // 2, RngStream(seed, 9))
    obs = observe(po, a, d)
    return fit_arm(obs, 1), fit_arm(obs, 0), d, obs


class _StubFit:
    """Bare residual/leverage carrier for hand-computed variance examples."""

    def __init__(self, resid, leverages, n_total, p=0):
        self.resid = np.asarray(resid, dtype=float)
        self.arm_leverages = np.asarray(leverages, dtype=float)
        self.n_total = n_total
        self.n_arm = self.resid.size
        self.p = p
        self.beta_hat = np.zeros(p)


class TestHcVariance:
    def test_hand_computed_hc0(self):
        # n=6, arms of 3, residuals (1,-1,0) and (2,-2,0), zero leverage:
        # 6/(3*2)*2 + 6/(3*2)*8 = 10
        f1 = _StubFit([1.0, -1.0, 0.0], np.zeros(3), 6)
        f0 = _StubFit([2.0, -2.0, 0.0], np.zeros(3), 6)
        assert hc_variance(f1, f0, 0) == pytest.approx(10.0)

    def test_p_zero_all_corrections_collapse(self):
        f1 = _StubFit([1.0, -0.5, 0.25], np.zeros(3), 7)
        f0 = _StubFit([0.5, 0.25, -1.0, 0.25], np.zeros(4), 7)
        hc0 = hc_variance(f1, f0, 0)
        assert hc_variance(f1, f0, 1) == pytest.approx(hc0)
        assert hc_variance(f1, f0, 2) == pytest.approx(hc0)
        assert hc_variance(f1, f0, 3) == pytest.approx(hc0)

    def test_zero_residuals_zero_estimates(self):
        d = _design(20, 2, 1)
        beta = np.array([1.0, -2.0])
        po = PotentialOutcomes(d.x @ beta + 1.0, d.x @ beta)
        a = sample_assignment(20, 10, RngStream(2))
        obs = observe(po, a, d)
        ve = variance_estimates(fit_arm(obs, 1), fit_arm(obs, 0))
        for value in ve.by_name().values():
            assert value == pytest.approx(0.0, abs=1e-16)

    def test_ordering_invariants(self):
        for seed in range(40):
            f1, f0, _, _ = _fits(seed=seed)
            ve = variance_estimates(f1, f0)
            assert 0.0 <= ve.hc0 <= ve.hc2 <= ve.hc3
            assert ve.hc1 >= ve.hc0

    def test_pointwise_residual_ordering(self):
        f1, f0, _, _ = _fits(seed=11)
        for fit in (f1, f0):
            e0 = np.abs(fit.resid)
            e2 = np.abs(fit.resid / np.sqrt(1 - fit.arm_leverages))
            e3 = np.abs(fit.resid / (1 - fit.arm_leverages))
            assert np.all(e0 <= e2 + 1e-15)
            assert np.all(e2 <= e3 + 1e-15)

    def test_hc1_total_vs_arm_level(self):
        f1, f0, _, _ = _fits(seed=3, n=40, p=4)
        n, p = 40, 4
        want_total = ((n - 1) / (n - p)) * hc_variance(f1, f0, 0)
        assert hc_variance(f1, f0, 1) == pytest.approx(want_total)
        arm = hc_variance(f1, f0, 1, hc1_arm_level=True)
        n1, n0 = f1.n_arm, f0.n_arm
        parts = []
        for fit, n_t in ((f1, n1), (f0, n0)):
            factor = (n_t - 1) / (n_t - p - 1)
            parts.append(n / (n_t * (n_t - 1)) * factor * float(fit.resid @ fit.resid))
        assert arm == pytest.approx(sum(parts))

    def test_leverage_at_one(self):
        f1 = _StubFit([1.0, 2.0], np.array([1.0, 0.0]), 5, p=1)
        f0 = _StubFit([1.0, -1.0, 0.0], np.zeros(3), 5, p=1)
        with pytest.raises(LeverageAtOne):
            hc_variance(f1, f0, 2)

    def test_degenerate_df(self):
        f1 = _StubFit([1.0, 2.0], np.zeros(2), 4, p=4)
        f0 = _StubFit([1.0, -1.0], np.zeros(2), 4, p=4)
        with pytest.raises(DegenerateDf):
            hc_variance(f1, f0, 1)

    def test_invariant_under_column_transform(self):
        rng = np.random.default_rng(4)
        n, p = 40, 3
        data = rng.standard_normal((n, p))
        po = PotentialOutcomes(rng.standard_normal(n), rng.standard_normal(n))
        a = sample_assignment(n, 18, RngStream(5))

        def estimates(mat):
            d = center_and_reduce(RawCovariates(mat))
            obs = observe(po, a, d)
            ve = variance_estimates(fit_arm(obs, 1), fit_arm(obs, 0))
            return np.array(list(ve.by_name().values()))

        base = estimates(data)
        for _ in range(15):
            t = rng.standard_normal((p, p))
            while abs(np.linalg.det(t)) < 1e-3:
                t = rng.standard_normal((p, p))
            np.testing.assert_allclose(estimates(data @ t), base, rtol=1e-8)


class TestMonteCarloConservative:
    def test_hc0_not_anticonservative_for_sigma_n2(self, normal_cells_n1000):
        # standard-normal design and noise, n=1000, p=8: the HC0 mean must
        # stay within 5% of the population variance from below
        _, cells = normal_cells_n1000
        for rec in cells:
            ratio = float(np.mean(rec.hc_adj["hc0"][rec.valid])) / rec.sigma_n2
            assert ratio >= 0.95


class TestWaldInterval:
    def test_degenerate_interval(self):
        iv = wald_interval(2.0, 0.0, 100, 0.95)
        assert iv.lower == iv.upper == 2.0

    def test_hand_computed_half_width(self):
        iv = wald_interval(0.0, 1.0, 100, 0.95)
        assert iv.critical == pytest.approx(1.959964, abs=1e-6)
        assert iv.upper == pytest.approx(0.195996, abs=1e-5)
        assert iv.lower == pytest.approx(-iv.upper)

    def test_negative_variance(self):
        with pytest.raises(NegativeVariance):
            wald_interval(0.0, -1e-9, 10, 0.95)

    def test_bad_level(self):
        with pytest.raises(ValueError):
            wald_interval(0.0, 1.0, 10, 1.0)

    def test_exact_linear_dgp_coverage_at_least_nominal(self):
        # with exactly linear outcomes the adjusted estimator equals tau and
        # every interval with positive variance covers
        d = _design(30, 2, 6)
        beta = np.array([2.0, 1.0])
        po = PotentialOutcomes(d.x @ beta + 1.0, d.x @ beta)
        hits = 0
        trials = 200
        gen = RngStream(7).generator()
        for _ in range(trials):
            a = sample_assignment(30, 15, gen)
            obs = observe(po, a, d)
            f1, f0 = fit_arm(obs, 1), fit_arm(obs, 0)
            ve = variance_estimates(f1, f0)
            iv = wald_interval(f1.mu_hat - f0.mu_hat, ve.hc3, 30, 0.95)
            hits += iv.lower - 1e-12 <= po.tau <= iv.upper + 1e-12
        assert hits / trials >= 0.95
