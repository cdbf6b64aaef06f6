import math

import numpy as np
import pytest
from scipy import integrate, special, stats

from eslab.distributions import (
    GammaApprox,
    WinnerValueDist,
    gamma_cdf,
    gamma_params,
    gamma_pdf,
    gamma_quantile,
    gen_chi2_cdf,
    order_stat_cdf,
    order_stat_cdf_from_value_cdf,
    order_stat_pdf,
    regularized_lower_gamma,
    regularized_upper_gamma,
    winner_value_cdf,
    winner_value_pdf,
)

EXPONENTIAL = GammaApprox(upsilon=0.5, eta=1.0)  # chi-square with 2 dof


class TestGammaParams:
    def test_identity_spectrum_is_chi_square(self):
        params = gamma_params((8.0, 8.0))
        assert params.upsilon == 0.5
        assert params.eta == 4.0

    def test_discus_sums(self):
        params = gamma_params((13.0, 103.0))
        assert params.upsilon == pytest.approx(13.0 / 206.0, rel=1e-15)
        assert params.eta == pytest.approx(169.0 / 206.0, rel=1e-15)

    def test_cigar_sums(self):
        params = gamma_params((21.0, 201.0))
        assert params.upsilon == pytest.approx(21.0 / 402.0, rel=1e-15)
        assert params.eta == pytest.approx(441.0 / 402.0, rel=1e-15)

    def test_moment_matching_random_spectra(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            n = rng.integers(1, 40)
            spectrum = rng.uniform(0.05, 50.0, size=n)
            s1, s2 = spectrum.sum(), (spectrum**2).sum()
            params = gamma_params((s1, s2))
            assert params.mean == pytest.approx(s1, rel=1e-12)
            assert params.variance == pytest.approx(2.0 * s2, rel=1e-12)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            gamma_params((0.0, 1.0))


class TestRegularizedGamma:
    def test_zero_argument(self):
        assert regularized_lower_gamma(3.2, 0.0) == 0.0
        assert regularized_upper_gamma(3.2, 0.0) == 1.0

    def test_exponential_identity(self):
        x = np.linspace(0.01, 20.0, 50)
        assert np.allclose(regularized_lower_gamma(1.0, x), -np.expm1(-x), atol=1e-14)

    def test_gaussian_identity(self):
        assert regularized_lower_gamma(0.5, 0.5) == pytest.approx(math.erf(1.0 / math.sqrt(2.0)), abs=1e-13)

    def test_matches_scipy_within_1e12(self):
        rng = np.random.default_rng(7)
        shapes = rng.uniform(0.05, 60.0, size=400)
        args = rng.uniform(0.0, 120.0, size=400)
        ours = regularized_lower_gamma(shapes, args)
        ref = special.gammainc(shapes, args)
        assert np.abs(ours - ref).max() <= 1e-12

    def test_upper_complements_lower(self):
        rng = np.random.default_rng(8)
        shapes = rng.uniform(0.1, 30.0, size=100)
        args = rng.uniform(0.0, 80.0, size=100)
        total = regularized_lower_gamma(shapes, args) + regularized_upper_gamma(shapes, args)
        assert np.allclose(total, 1.0, atol=1e-13)

    def test_upper_tail_keeps_relative_accuracy(self):
        ours = regularized_upper_gamma(2.0, 60.0)
        ref = float(special.gammaincc(2.0, 60.0))
        assert ours == pytest.approx(ref, rel=1e-12)
        assert ours < 1e-20

    def test_rejects_bad_domain(self):
        with pytest.raises(ValueError):
            regularized_lower_gamma(-1.0, 2.0)
        with pytest.raises(ValueError):
            regularized_lower_gamma(1.0, -2.0)


class TestGammaCdfPdf:
    def test_cdf_at_zero(self):
        assert gamma_cdf(0.0, GammaApprox(0.5, 0.5)) == 0.0

    def test_chi_square_one_dof(self):
        assert gamma_cdf(1.0, GammaApprox(0.5, 0.5)) == pytest.approx(0.6826895, abs=1e-7)

    def test_chi_square_two_dof(self):
        assert gamma_cdf(2.0, EXPONENTIAL) == pytest.approx(1.0 - math.exp(-1.0), abs=1e-13)

    def test_pdf_exponential_value(self):
        assert gamma_pdf(2.0, EXPONENTIAL) == pytest.approx(0.5 * math.exp(-1.0), rel=1e-13)

    def test_pdf_at_zero_by_shape(self):
        assert gamma_pdf(0.0, GammaApprox(0.5, 4.0)) == 0.0
        assert gamma_pdf(0.0, EXPONENTIAL) == 0.5
        assert gamma_pdf(0.0, GammaApprox(0.5, 0.5)) == math.inf

    def test_pdf_is_cdf_derivative(self):
        params = gamma_params((13.0, 103.0))
        h = 1e-5
        derivative = (gamma_cdf(3.0 + h, params) - gamma_cdf(3.0 - h, params)) / (2.0 * h)
        assert gamma_pdf(3.0, params) == pytest.approx(derivative, rel=1e-6)

    @pytest.mark.parametrize("sums", [(8.0, 8.0), (13.0, 103.0), (21.0, 201.0)])
    def test_pdf_integrates_to_one(self, sums):
        params = gamma_params(sums)
        total, err = integrate.quad(lambda v: gamma_pdf(v, params), 0.0, np.inf, limit=200)
        assert abs(total - 1.0) <= 1e-8
        assert err < 1e-8

    def test_negative_value_rejected(self):
        with pytest.raises(ValueError):
            gamma_cdf(-0.1, EXPONENTIAL)

    def test_quantile_roundtrip(self):
        params = gamma_params((13.0, 103.0))
        for q in (0.01, 0.3, 0.5, 0.9, 0.999):
            assert gamma_cdf(gamma_quantile(q, params), params) == pytest.approx(q, abs=1e-12)


class TestExactGenChi2:
    def test_zero(self):
        assert gen_chi2_cdf(0.0, [1.0, 2.0]) == 0.0

    def test_two_unit_weights(self):
        assert gen_chi2_cdf(2.0, [1.0, 1.0]) == pytest.approx(1.0 - math.exp(-1.0), abs=1e-8)

    def test_four_unit_weights(self):
        # closed form 1 - exp(-x/2)(1 + x/2) at x=4
        assert gen_chi2_cdf(4.0, [1.0] * 4) == pytest.approx(0.5939942, abs=1e-7)

    @pytest.mark.parametrize("n", [1, 2, 4])
    def test_matches_chi_square_closed_form(self, n):
        grid = np.linspace(0.05, stats.chi2.ppf(0.999, n), 25)
        ours = gen_chi2_cdf(grid, [1.0] * n)
        assert np.abs(ours - stats.chi2.cdf(grid, n)).max() <= 1e-8

    def test_scaled_equal_spectrum_collapses_to_gamma(self):
        # equal weights make the moment-matched gamma exact
        spectrum = [2.5] * 6
        params = gamma_params((15.0, 37.5))
        grid = np.linspace(0.2, 60.0, 100)
        ours = gen_chi2_cdf(grid, spectrum)
        assert np.abs(ours - gamma_cdf(grid, params)).max() <= 1e-5

    def test_monte_carlo_agreement(self):
        spectrum = np.array([10.0, 1.0, 1.0, 1.0])
        rng = np.random.default_rng(99)
        draws = rng.standard_normal((100_000, 4))
        values = (draws**2) @ spectrum
        grid = np.linspace(values.min(), values.max(), 1025)
        cdf_grid = gen_chi2_cdf(grid, spectrum)
        ordered = np.sort(values)
        f = np.interp(ordered, grid, cdf_grid)
        n = ordered.size
        positions = np.arange(1, n + 1) / n
        ks = max((positions - f).max(), (f - positions + 1.0 / n).max())
        assert ks <= 0.01  # DKW 99% bound ~0.0086

    def test_rejects_negative_value_and_bad_spectrum(self):
        with pytest.raises(ValueError):
            gen_chi2_cdf(-1.0, [1.0])
        with pytest.raises(ValueError):
            gen_chi2_cdf(1.0, [1.0, -1.0])

    def test_budget_exhaustion_reports_estimate(self):
        with pytest.raises(RuntimeError):
            gen_chi2_cdf(5.0, [1.0, 2.0], tol=1e-9, max_half_periods=3)


class TestWinnerValue:
    def test_single_competitor_is_base_density(self):
        dist = WinnerValueDist(base=EXPONENTIAL, lam=1)
        v = np.linspace(0.0, 10.0, 21)
        assert np.array_equal(winner_value_pdf(v, dist), gamma_pdf(v, EXPONENTIAL))
        assert np.allclose(winner_value_cdf(v, dist), gamma_cdf(v, EXPONENTIAL), atol=1e-15)

    def test_two_competitors_at_median(self):
        params = gamma_params((13.0, 103.0))
        median = gamma_quantile(0.5, params)
        dist = WinnerValueDist(base=params, lam=2)
        assert winner_value_pdf(median, dist) == pytest.approx(gamma_pdf(median, params), rel=1e-9)

    def test_exponential_closed_form_pdf(self):
        dist = WinnerValueDist(base=EXPONENTIAL, lam=3)
        assert winner_value_pdf(1.0, dist) == pytest.approx(1.5 * math.exp(-1.5), rel=1e-12)

    def test_exponential_closed_form_cdf(self):
        dist = WinnerValueDist(base=EXPONENTIAL, lam=4)
        assert winner_value_cdf(2.0, dist) == pytest.approx(1.0 - math.exp(-4.0), rel=1e-12)

    def test_cdf_at_zero(self):
        assert winner_value_cdf(0.0, WinnerValueDist(base=EXPONENTIAL, lam=7)) == 0.0

    @pytest.mark.parametrize("lam", [1, 5, 100])
    def test_pdf_integrates_to_one(self, lam):
        # includes a shape < 1 base, singular at the origin
        params = gamma_params((13.0, 103.0))
        dist = WinnerValueDist(base=params, lam=lam)
        total, _ = integrate.quad(lambda v: winner_value_pdf(v, dist), 0.0, np.inf, limit=400)
        assert abs(total - 1.0) <= 1e-6

    def test_cdf_consistent_with_pdf_by_quadrature(self):
        dist = WinnerValueDist(base=gamma_params((8.0, 8.0)), lam=20)
        upto = 3.0
        total, _ = integrate.quad(lambda v: winner_value_pdf(v, dist), 0.0, upto, limit=200)
        assert total == pytest.approx(winner_value_cdf(upto, dist), abs=1e-6)

    def test_stochastic_dominance_in_population_size(self):
        params = gamma_params((13.0, 103.0))
        v = np.linspace(0.0, 40.0, 200)
        previous = winner_value_cdf(v, WinnerValueDist(base=params, lam=1))
        for lam in (2, 3, 5, 10, 50):
            current = winner_value_cdf(v, WinnerValueDist(base=params, lam=lam))
            assert np.all(current >= previous - 1e-12)
            previous = current

    def test_large_population_no_underflow(self):
        dist = WinnerValueDist(base=EXPONENTIAL, lam=10**6)
        value = winner_value_pdf(1e-5, dist)
        assert np.isfinite(value) and value > 0.0
        assert 0.0 <= winner_value_cdf(50.0, dist) <= 1.0


class TestOrderStatistics:
    def test_first_degree_reduces_to_winner(self):
        params = gamma_params((13.0, 103.0))
        v = np.linspace(0.0, 30.0, 50)
        dist = WinnerValueDist(base=params, lam=9)
        assert np.allclose(order_stat_cdf(v, 1, 9, params), winner_value_cdf(v, dist), atol=1e-13)
        assert np.allclose(order_stat_pdf(v, 1, 9, params), winner_value_pdf(v, dist), rtol=1e-12)

    def test_last_degree_is_maximum(self):
        v = np.linspace(0.0, 30.0, 50)
        f = gamma_cdf(v, EXPONENTIAL)
        assert np.allclose(order_stat_cdf(v, 6, 6, EXPONENTIAL), f**6, atol=1e-12)

    def test_binomial_arithmetic_at_median(self):
        median = gamma_quantile(0.5, EXPONENTIAL)
        assert order_stat_cdf(median, 2, 3, EXPONENTIAL) == pytest.approx(0.5, abs=1e-12)

    def test_pdf_is_cdf_derivative(self):
        params = gamma_params((13.0, 103.0))
        h = 1e-5
        for ell, lam in ((2, 10), (5, 10), (9, 10)):
            at = 8.0
            derivative = (order_stat_cdf(at + h, ell, lam, params) - order_stat_cdf(at - h, ell, lam, params)) / (2 * h)
            assert order_stat_pdf(at, ell, lam, params) == pytest.approx(derivative, rel=1e-6)

    def test_telescoping_sum_over_degrees(self):
        params = gamma_params((13.0, 103.0))
        lam = 20
        v = np.linspace(0.05, 40.0, 60)
        total = sum(order_stat_pdf(v, ell, lam, params) for ell in range(1, lam + 1))
        assert np.allclose(total, lam * gamma_pdf(v, params), atol=1e-8, rtol=1e-8)

    def test_matches_scipy_beta_transform(self):
        # F of the l-th order statistic is Beta(l, lam-l+1) evaluated at F(v)
        params = gamma_params((8.0, 8.0))
        v = np.linspace(0.1, 30.0, 40)
        f = gamma_cdf(v, params)
        for ell, lam in ((3, 7), (4, 4), (1, 12), (7, 8)):
            ref = stats.beta.cdf(f, ell, lam - ell + 1)
            assert np.allclose(order_stat_cdf(v, ell, lam, params), ref, atol=1e-12)

    def test_large_population_log_space(self):
        value = order_stat_cdf(0.5, 2, 10**6, EXPONENTIAL)
        assert 0.0 <= value <= 1.0
        assert np.isfinite(order_stat_pdf(0.5, 2, 10**6, EXPONENTIAL))

    def test_degree_out_of_range(self):
        with pytest.raises(ValueError):
            order_stat_cdf(1.0, 0, 5, EXPONENTIAL)
        with pytest.raises(ValueError):
            order_stat_pdf(1.0, 6, 5, EXPONENTIAL)
        with pytest.raises(ValueError):
            WinnerValueDist(base=EXPONENTIAL, lam=3, ell=5)

    def test_from_value_cdf_matches_gamma_route(self):
        params = gamma_params((13.0, 103.0))
        v = np.linspace(0.0, 30.0, 30)
        f = gamma_cdf(v, params)
        assert np.allclose(
            order_stat_cdf_from_value_cdf(f, 3, 11),
            order_stat_cdf(v, 3, 11, params),
            atol=1e-14,
        )
