import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy import integrate, stats

from paretocfar.errors import DomainError, InvalidParametersError
from paretocfar.pareto_model import (
    DiffExp,
    ExpRate,
    GammaLaw,
    ParetoMin,
    ParetoParams,
    g_density,
    log_reduce,
    open_uniform,
    pareto_cdf,
    pareto_from_uniform,
    pareto_pdf,
    sample_pareto,
    spread_about_min_law,
    window_mean_log_law,
    window_min_law,
)

shapes = st.floats(min_value=0.05, max_value=50.0)
scales = st.floats(min_value=1e-3, max_value=1e3)


class TestParetoParams:
    @pytest.mark.parametrize("shape,scale", [(0, 1), (-1, 1), (1, 0), (1, -2), (math.nan, 1), (1, math.inf)])
    def test_rejects_non_positive(self, shape, scale):
        with pytest.raises(InvalidParametersError):
            ParetoParams(shape, scale)

    def test_errors_are_value_errors(self):
        with pytest.raises(ValueError):
            ParetoParams(-1.0, 1.0)

    def test_frozen(self):
        p = ParetoParams(5.0, 0.7)
        with pytest.raises(AttributeError):
            p.shape = 3.0


class TestCdfPdf:
    def test_cdf_zero_at_scale(self):
        assert pareto_cdf(0.7, ParetoParams(5.0, 0.7)) == 0.0

    def test_cdf_median_unit_pareto(self):
        assert pareto_cdf(2.0, ParetoParams(1.0, 1.0)) == pytest.approx(0.5)

    def test_cdf_at_clairvoyant_threshold(self):
        assert pareto_cdf(7.0, ParetoParams(5.0, 0.7)) == pytest.approx(1 - 1e-5, abs=1e-15)

    def test_cdf_below_support(self):
        assert pareto_cdf(0.5, ParetoParams(2.0, 1.0)) == 0.0

    def test_pdf_examples(self):
        assert pareto_pdf(0.5, ParetoParams(1.0, 1.0)) == 0.0
        assert pareto_pdf(1.0, ParetoParams(1.0, 1.0)) == pytest.approx(1.0)
        assert pareto_pdf(2.0, ParetoParams(2.0, 1.0)) == pytest.approx(0.25)

    def test_vectorised(self):
        y = np.array([0.5, 1.0, 2.0, 4.0])
        np.testing.assert_allclose(pareto_cdf(y, ParetoParams(1.0, 1.0)), [0.0, 0.0, 0.5, 0.75])

    @given(shape=shapes, scale=scales, a=st.floats(1.0, 1e6), b=st.floats(1.0, 1e6))
    def test_cdf_nondecreasing(self, shape, scale, a, b):
        p = ParetoParams(shape, scale)
        lo, hi = sorted((a * scale, b * scale))
        assert pareto_cdf(lo, p) <= pareto_cdf(hi, p)

    @given(shape=shapes, scale=scales)
    def test_cdf_limits(self, shape, scale):
        p = ParetoParams(shape, scale)
        assert pareto_cdf(scale, p) == 0.0
        assert pareto_cdf(scale * 1e300 ** (1 / max(shape, 1.0)), p) > 0.999

    @given(shape=st.floats(0.5, 30.0), scale=st.floats(0.01, 100.0), ratio=st.floats(1.001, 10.0))
    def test_pdf_is_derivative_of_cdf(self, shape, scale, ratio):
        # beyond the 1e-3 tail the differenced cdf loses digits to cancellation
        assume(ratio ** -shape >= 1e-3)
        p = ParetoParams(shape, scale)
        y = ratio * scale
        step = 1e-6 * y
        deriv = (pareto_cdf(y + step, p) - pareto_cdf(y - step, p)) / (2 * step)
        assert deriv == pytest.approx(pareto_pdf(y, p), rel=1e-6)

    def test_pdf_integrates_to_one(self):
        p = ParetoParams(5.0, 0.7)
        total, _ = integrate.quad(lambda y: pareto_pdf(y, p), 0.7, np.inf)
        assert total == pytest.approx(1.0, abs=1e-9)


class TestSampling:
    def test_inverse_transform_examples(self):
        assert pareto_from_uniform(1.0, ParetoParams(3.0, 0.7)) == 0.7
        assert pareto_from_uniform(0.25, ParetoParams(1.0, 1.0)) == pytest.approx(4.0)

    def test_open_uniform_excludes_zero(self):
        u = open_uniform(np.random.default_rng(0), 10**6)
        assert u.min() > 0.0 and u.max() <= 1.0

    def test_samples_never_infinite(self):
        y = sample_pareto(ParetoParams(0.5, 1.0), np.random.default_rng(1), 10**6)
        assert np.all(np.isfinite(y)) and y.min() >= 1.0

    def test_scalar_draw(self):
        y = sample_pareto(ParetoParams(5.0, 0.7), np.random.default_rng(2))
        assert isinstance(y, float) and y >= 0.7

    def test_seeded_reproducible(self):
        p = ParetoParams(5.0, 0.7)
        a = sample_pareto(p, np.random.default_rng(3), 100)
        b = sample_pareto(p, np.random.default_rng(3), 100)
        assert np.array_equal(a, b)

    def test_ks_against_cdf(self):
        p = ParetoParams(5.0, 0.7)
        y = sample_pareto(p, np.random.default_rng(4), 100_000)
        assert stats.kstest(y, lambda v: pareto_cdf(v, p)).pvalue > 0.01


class TestLogReduce:
    def test_examples(self):
        assert log_reduce(0.7, 0.7) == 0.0
        assert log_reduce(math.e * 2.0, 2.0) == pytest.approx(1.0)
        assert log_reduce(7.0, 0.7) == pytest.approx(math.log(10.0), rel=1e-12)

    def test_precision_near_one(self):
        assert log_reduce(1.0 + 1e-12, 1.0) == pytest.approx(1e-12, rel=1e-6)

    def test_overflow_fallback(self):
        assert log_reduce(1e300, 1e-300) == pytest.approx(600 * math.log(10.0), rel=1e-12)

    def test_domain(self):
        with pytest.raises(DomainError):
            log_reduce(0.5, 0.7)
        with pytest.raises(DomainError):
            log_reduce(1.0, 0.0)

    def test_vectorised(self):
        np.testing.assert_allclose(log_reduce(np.array([1.0, math.e]), 1.0), [0.0, 1.0])


class TestGDensity:
    def test_continuous_at_zero(self):
        n, rate = 4, 2.0
        assert g_density(1e-15, n, rate) == pytest.approx(n / (n + 1) * rate)
        assert g_density(-1e-15, n, rate) == pytest.approx(n / (n + 1) * rate)

    def test_example_value(self):
        assert g_density(1.0, 4, 1.0) == pytest.approx(0.8 * math.exp(-1.0), rel=1e-12)
        assert g_density(1.0, 4, 1.0) == pytest.approx(0.29430, abs=5e-6)

    @pytest.mark.parametrize("n,rate", [(1, 1.0), (4, 5.0), (8, 0.3)])
    def test_integrates_to_one(self, n, rate):
        total = sum(integrate.quad(g_density, lo, hi, args=(n, rate))[0] for lo, hi in ((-50 / rate, 0), (0, 50 / rate)))
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_no_overflow_far_out(self):
        with np.errstate(over="raise", invalid="raise"):
            vals = g_density(np.array([-1e4, 1e4]), 8, 5.0)
        assert np.all(vals >= 0)

    def test_rejects_bad_arguments(self):
        with pytest.raises(InvalidParametersError):
            g_density(0.0, 0, 1.0)
        with pytest.raises(InvalidParametersError):
            g_density(0.0, 2, -1.0)


class TestDerivedLaws:
    def test_validation(self):
        with pytest.raises(InvalidParametersError):
            ExpRate(0.0)
        with pytest.raises(InvalidParametersError):
            GammaLaw(0, 1.0)
        with pytest.raises(InvalidParametersError):
            GammaLaw(1.5, 1.0)
        with pytest.raises(InvalidParametersError):
            GammaLaw(2, 0.0)
        with pytest.raises(InvalidParametersError):
            DiffExp(0, 1.0)
        with pytest.raises(InvalidParametersError):
            spread_about_min_law(ParetoParams(5.0, 1.0), 1)

    def test_law_parameters(self):
        p = ParetoParams(5.0, 0.7)
        assert window_mean_log_law(p, 4) == GammaLaw(4, 1 / 20)
        assert window_min_law(p, 8) == ParetoMin(40.0, 0.7)
        assert spread_about_min_law(p, 8) == GammaLaw(7, 1 / 40)

    def test_diffexp_cdf_matches_density(self):
        law = DiffExp(4, 3.0)
        for g in (-0.5, -0.01, 0.0, 0.2, 1.5):
            area = integrate.quad(law.pdf, -np.inf, g)[0]
            assert law.cdf(g) == pytest.approx(area, abs=1e-9)

    def test_gamma_law_matches_scipy(self):
        law = GammaLaw(3, 0.5)
        assert law.cdf(1.0) == pytest.approx(stats.gamma.cdf(1.0, 3, scale=0.5))
