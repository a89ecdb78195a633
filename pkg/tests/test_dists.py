"""Distribution helpers checked against quadrature and hand-computed values."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from idrkit.dists import (BivariateGaussianParams, bh_adjust,
                          bivariate_normal_density,
                          bivariate_normal_log_density,
                          chisq_survival_even_df, normal_cdf, normal_log_pdf,
                          normal_quantile, t5_cdf, t5_quantile)
from idrkit.errors import DomainError


def _normal_pdf(z):
    return np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi)


class TestNormal:
    def test_cdf_against_quadrature(self):
        for z in (-3.0, -1.0, 0.0, 0.5, 2.4):
            val, _ = integrate.quad(_normal_pdf, -np.inf, z)
            assert normal_cdf(z) == pytest.approx(val, abs=1e-12)

    def test_cdf_known_points(self):
        assert normal_cdf(0.0) == pytest.approx(0.5)
        assert normal_cdf(1.959963984540054) == pytest.approx(0.975, abs=1e-12)

    def test_quantile_inverts_cdf(self):
        p = np.linspace(0.001, 0.999, 101)
        np.testing.assert_allclose(normal_cdf(normal_quantile(p)), p,
                                   atol=1e-12)

    def test_quantile_domain(self):
        with pytest.raises(DomainError):
            normal_quantile(0.0)
        with pytest.raises(DomainError):
            normal_quantile(1.0)

    def test_log_pdf(self):
        z = np.array([-2.0, 0.0, 1.5])
        np.testing.assert_allclose(np.exp(normal_log_pdf(z)), _normal_pdf(z),
                                   rtol=1e-12)


class TestBivariateNormal:
    def test_density_integrates_to_one(self):
        params = BivariateGaussianParams(1.0, 2.0, 0.7)
        val, err = integrate.dblquad(
            lambda y, x: bivariate_normal_density(x, y, params),
            -9.0, 11.0, lambda x: -9.0, lambda x: 11.0)
        assert val == pytest.approx(1.0, abs=1e-6)

    def test_marginal_recovery(self):
        # integrating out one coordinate leaves the 1-D normal density
        params = BivariateGaussianParams(0.5, 1.5, 0.4)
        x = 1.2
        val, _ = integrate.quad(
            lambda y: bivariate_normal_density(x, y, params), -10.0, 11.0)
        sd = np.sqrt(params.variance)
        expect = _normal_pdf((x - params.mean) / sd) / sd
        assert val == pytest.approx(expect, rel=1e-9)

    def test_independence_factorizes(self):
        params = BivariateGaussianParams(0.0, 1.0, 0.0)
        z1, z2 = 0.3, -1.1
        assert bivariate_normal_density(z1, z2, params) == pytest.approx(
            _normal_pdf(z1) * _normal_pdf(z2), rel=1e-12)

    def test_log_density_matches_density(self):
        params = BivariateGaussianParams(2.0, 0.5, 0.9)
        z1 = np.array([1.0, 2.5])
        z2 = np.array([2.0, 1.5])
        np.testing.assert_allclose(
            np.exp(bivariate_normal_log_density(z1, z2, params)),
            bivariate_normal_density(z1, z2, params), rtol=1e-12)


class TestChisqSurvival:
    def test_df4_closed_form(self):
        # survival of chi^2_4 is exp(-x/2) * (1 + x/2)
        for x in (0.0, 1.0, 5.0, 11.9829):
            assert chisq_survival_even_df(x, 4) == pytest.approx(
                np.exp(-x / 2.0) * (1.0 + x / 2.0), rel=1e-12)

    def test_against_quadrature_df2(self):
        # chi^2_2 is Exponential(1/2)
        x = 3.7
        assert chisq_survival_even_df(x, 2) == pytest.approx(
            np.exp(-x / 2.0), rel=1e-12)

    def test_rejects_odd_df(self):
        with pytest.raises(DomainError):
            chisq_survival_even_df(1.0, 3)
        with pytest.raises(DomainError):
            chisq_survival_even_df(-0.5, 4)


class TestT5:
    def test_cdf_against_quadrature(self):
        # Student t with 5 degrees of freedom
        from scipy.special import gamma

        nu = 5.0
        c = gamma(3.0) / (np.sqrt(nu * np.pi) * gamma(2.5))

        def pdf(x):
            return c * (1.0 + x * x / nu) ** (-3.0)

        for x in (-2.0, 0.0, 1.3):
            val, _ = integrate.quad(pdf, -np.inf, x)
            assert t5_cdf(x) == pytest.approx(val, abs=1e-10)

    def test_quantile_roundtrip(self):
        p = np.linspace(0.01, 0.99, 50)
        np.testing.assert_allclose(t5_cdf(t5_quantile(p)), p, atol=1e-10)

    def test_symmetry(self):
        assert t5_cdf(0.0) == pytest.approx(0.5)
        assert t5_cdf(-1.7) == pytest.approx(1.0 - t5_cdf(1.7), abs=1e-12)


class TestBhAdjust:
    def test_hand_computed(self):
        # adjusted = min over j>=i of p_(j) * n / j, mapped back
        p = np.array([0.01, 0.04, 0.03, 0.005])
        # sorted: 0.005, 0.01, 0.03, 0.04 -> *4/k: 0.02, 0.02, 0.04, 0.04
        expect = np.array([0.02, 0.04, 0.04, 0.02])
        np.testing.assert_allclose(bh_adjust(p), expect, rtol=1e-12)

    def test_single_value(self):
        np.testing.assert_allclose(bh_adjust([0.2]), [0.2])

    def test_monotone_in_sorted_order(self):
        rng = np.random.default_rng(7)
        p = rng.uniform(size=200)
        adj = bh_adjust(p)
        order = np.argsort(p)
        assert np.all(np.diff(adj[order]) >= -1e-15)

    @given(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1,
                    max_size=60))
    @settings(max_examples=100, deadline=None)
    def test_bounds_and_dominance(self, raw):
        p = np.array(raw)
        adj = bh_adjust(p)
        assert np.all(adj >= p - 1e-15)
        assert np.all(adj <= 1.0 + 1e-15)

    def test_rejects_bad_input(self):
        with pytest.raises(DomainError):
            bh_adjust([0.5, 1.5])
        with pytest.raises(DomainError):
            bh_adjust([[0.1, 0.2]])
