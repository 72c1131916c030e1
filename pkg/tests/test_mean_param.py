import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from psdist import families, mean_param
from psdist.mean_param import (
    MeanParamDistribution,
    cdf,
    log_coefficient,
    log_pmf,
    pmf,
    pmf_printed,
    quantile,
    sample,
    variance_fn,
    x_of_y,
    y_of_x,
)
from psdist.series import coefficient

XS = (0.1, 1.0, 10.0)


def mp_log_pmf(k, x, dps=60):
    """High-precision log pmf from the composition a_k y^k / w(y)."""
    with mpmath.workdps(dps):
        x = mpmath.mpf(x)
        y = 8 * x * (2 * x + 1) / (4 * x + 1) ** 2
        w = (1 + mpmath.sqrt(1 - y)) ** mpmath.mpf(-0.5)
        # a_k = Catalan(2k) / 16^k / sqrt(2), independent of the coefficient cache
        log_a = (
            mpmath.loggamma(4 * k + 1)
            - mpmath.loggamma(2 * k + 1)
            - mpmath.loggamma(2 * k + 2)
            - k * mpmath.log(16)
            - mpmath.log(2) / 2
        )
        return log_a + k * mpmath.log(y) - mpmath.log(w)


def mp_pmf(k, x):
    with mpmath.workdps(60):
        return mpmath.exp(mp_log_pmf(k, x))


class TestParameterMap:
    def test_y_at_one(self):
        assert y_of_x(Fraction(1)) == Fraction(24, 25)
        assert y_of_x(1.0) == pytest.approx(0.96, rel=1e-15)

    def test_y_at_quarter(self):
        assert y_of_x(Fraction(1, 4)) == Fraction(3, 4)

    def test_y_small_x(self):
        assert y_of_x(1e-12) == pytest.approx(8e-12, rel=1e-9)

    def test_x_of_y(self):
        assert x_of_y(Fraction(24, 25)) == 1
        assert x_of_y(Fraction(3, 4)) == Fraction(1, 4)
        assert x_of_y(0.75) == pytest.approx(0.25, rel=1e-15)
        assert x_of_y(1e-12) == pytest.approx(1e-12 / 8, rel=1e-9)

    @pytest.mark.parametrize("bad", [0.0, -1.0, float("nan"), float("inf")])
    def test_x_domain(self, bad):
        with pytest.raises(ValueError):
            y_of_x(bad)

    @pytest.mark.parametrize("bad", [0.0, 1.0, -0.5, Fraction(1)])
    def test_y_domain(self, bad):
        with pytest.raises(ValueError):
            x_of_y(bad)

    @pytest.mark.parametrize("x", [1e-3, 0.1, 1.0, 10.0, 1e3])
    def test_round_trip_exact(self, x):
        q = Fraction(x)
        assert x_of_y(y_of_x(q)) == q

    @pytest.mark.parametrize("x", [1e-3, 0.1, 1.0, 10.0])
    def test_round_trip_float(self, x):
        assert x_of_y(y_of_x(x)) == pytest.approx(x, rel=1e-12)

    def test_round_trip_float_large_x_limited_by_conditioning(self):
        # relative error of a float y is amplified by (2x+1)(4x+1) ~ 8e6
        x = 1e3
        err = abs(x_of_y(y_of_x(x)) / x - 1)
        assert err <= 8 * 2.2e-16 * (2 * x + 1) * (4 * x + 1)

    @settings(max_examples=200, deadline=None)
    @given(st.fractions(min_value=Fraction(1, 10**6), max_value=10**6))
    def test_rational_identity(self, q):
        y = y_of_x(q)
        assert (4 * q + 1) ** 2 * y == 8 * q * (2 * q + 1)
        assert 0 < y < 1
        assert x_of_y(y) == q

    @settings(max_examples=100, deadline=None)
    @given(st.floats(min_value=1e-6, max_value=1e4), st.floats(min_value=1.001, max_value=10))
    def test_y_increasing(self, x, factor):
        assert y_of_x(x * factor) > y_of_x(x)

    @pytest.mark.parametrize("x", XS)
    def test_sqrt_identity(self, x):
        d = MeanParamDistribution(x)
        assert abs(d.sqrt_one_minus_y * (4 * x + 1) - 1) <= 1e-12
        assert abs(math.sqrt(1 - d.y) * (4 * x + 1) - 1) <= 1e-12


class TestVarianceFunction:
    def test_values(self):
        assert variance_fn(1) == 15
        assert variance_fn(Fraction(1, 2)) == 3
        assert variance_fn(1e-9) / 1e-9 == pytest.approx(1.0, rel=1e-7)

    @pytest.mark.parametrize("x", [0.1, 1.0, 10.0])
    def test_ratio_of_y_to_derivative(self, x):
        h = x * 1e-6
        dy = (y_of_x(x + h) - y_of_x(x - h)) / (2 * h)
        assert y_of_x(x) / dy == pytest.approx(variance_fn(x), rel=1e-6)

    @pytest.mark.parametrize("x", [0.1, 1.0, 10.0])
    def test_agrees_with_generic_family(self, x):
        fam = families.get_family("flagship")
        st_ = families.YParamState(fam, y_of_x(x))
        assert families.mean_y(st_) == pytest.approx(x, rel=1e-12)
        assert families.variance_y(st_) == pytest.approx(variance_fn(x), rel=1e-10)


class TestPmf:
    @pytest.mark.parametrize("x", [1e-3, 0.1, 1.0, 10.0, 100.0])
    def test_k0_closed_form(self, x):
        assert pmf(0, x) == pytest.approx(math.sqrt((2 * x + 1) / (4 * x + 1)), rel=1e-15)

    def test_k0_x1(self):
        assert pmf(0, 1.0) == pytest.approx(math.sqrt(3 / 5), rel=1e-15)
        fam = families.get_family("flagship")
        assert families.pmf_y(families.YParamState(fam, 24 / 25), 0) == pytest.approx(
            0.7745966692, abs=1e-10
        )

    def test_k0_small_x_limit(self):
        assert pmf(0, 1e-12) == pytest.approx(1.0, abs=1e-11)

    @pytest.mark.parametrize("x", XS + (3.0,))
    @pytest.mark.parametrize("k", [0, 1, 2, 7, 30, 31, 64, 65, 200, 1000])
    def test_against_high_precision(self, k, x):
        assert pmf(k, x) == pytest.approx(float(mp_pmf(k, x)), rel=1e-13)

    @pytest.mark.parametrize("x", XS)
    def test_vectorized_matches_scalar(self, x):
        d = MeanParamDistribution(x)
        arr = d.pmf_range(0, 120)
        for k in range(120):
            assert arr[k] == pytest.approx(d.pmf(k), rel=1e-14)

    @pytest.mark.parametrize("x", XS)
    def test_positivity(self, x):
        assert np.all(MeanParamDistribution(x).pmf_range(0, 201) > 0)

    def test_exact_x_input(self):
        assert pmf(3, Fraction(1, 3)) == pytest.approx(pmf(3, 1 / 3), rel=1e-15)

    def test_domain(self):
        with pytest.raises(ValueError):
            pmf(0, 0.0)
        with pytest.raises(ValueError):
            pmf(-1, 1.0)


class TestLogPmf:
    def test_example(self):
        assert log_pmf(0, 1.0) == pytest.approx(0.5 * math.log(3 / 5), abs=1e-15)

    @pytest.mark.parametrize("x", XS)
    def test_consistency(self, x):
        for k in range(51):
            assert abs(log_pmf(k, x) - math.log(pmf(k, x))) <= 1e-12

    @pytest.mark.parametrize("k", [0, 10, 65, 500, 5_000, 50_000, 10**6])
    @pytest.mark.parametrize("x", [0.1, 10.0, 500.0])
    def test_absolute_error(self, k, x):
        ref = float(mp_log_pmf(k, x))
        # past |log pmf| ~ 1e5 a double cannot resolve 1e-10 absolute
        assert abs(log_pmf(k, x) - ref) <= max(1e-10, 4 * math.ulp(ref))

    def test_deep_tail(self):
        value = log_pmf(200, 10.0)
        assert math.isfinite(value) and value < 0
        assert 0.0 <= math.exp(value) <= 1.0
        # pmf(4000, 0.1) underflows but its log stays finite
        assert pmf(4000, 0.1) == 0.0
        assert math.isfinite(log_pmf(4000, 0.1))

    def test_log_coefficient_vectorized(self):
        ks = np.arange(0, 300)
        arr = log_coefficient(ks)
        for k in (0, 64, 65, 299):
            assert arr[k] == pytest.approx(math.log(coefficient(k).rational_part), abs=1e-14)


class TestPrinted:
    @pytest.mark.parametrize("x", [0.1, 1.0, 7.0])
    def test_printed_is_one_at_k0(self, x):
        assert pmf_printed(0, x) == 1.0

    @pytest.mark.parametrize("k", [1, 2, 4, 9])
    def test_printed_agrees_when_x_equals_k(self, k):
        assert pmf_printed(k, float(k)) == pytest.approx(pmf(k, float(k)), rel=1e-12)

    def test_printed_disagrees_off_diagonal(self):
        assert pmf_printed(2, 1.0) / pmf(2, 1.0) == pytest.approx(
            float(mp_pmf(2, 1.0) ** -1 * mpmath.binomial(9, 4) * 2**-2 * 5**2.5 * 9**-5.5), rel=1e-12
        )
        assert abs(pmf_printed(2, 1.0) / pmf(2, 1.0) - 1) > 0.1


class TestCdfQuantile:
    def test_cdf_k0(self):
        assert cdf(0, 1.0) == pytest.approx(math.sqrt(3 / 5), rel=1e-15)

    @pytest.mark.parametrize("x", XS)
    def test_cdf_approaches_one(self, x):
        d = MeanParamDistribution(x)
        k = 100
        while d.tail_bound(k) > 1e-12:
            k *= 2
        assert d.cdf(k) == pytest.approx(1.0, abs=1e-10)

    def test_cdf_monotone(self):
        d = MeanParamDistribution(1.0)
        values = [d.cdf(k) for k in range(0, 300, 7)]
        assert all(a <= b for a, b in zip(values, values[1:]))

    def test_quantile_threshold(self):
        p0 = math.sqrt(3 / 5)
        assert quantile(0.0, 1.0) == 0
        assert quantile(p0 - 1e-12, 1.0) == 0
        assert quantile(p0 + 1e-12, 1.0) == 1

    @settings(max_examples=100, deadline=None)
    @given(st.floats(min_value=0.0, max_value=0.999999), st.sampled_from([0.1, 1.0, 10.0]))
    def test_generalized_inverse(self, u, x):
        d = MeanParamDistribution(x)
        k = d.quantile(u)
        assert d.cdf(k) >= u - 1e-15
        if k > 0:
            assert d.cdf(k - 1) < u + 1e-15

    @pytest.mark.parametrize("k", [0, 3, 20])
    def test_quantile_below_cdf(self, k):
        d = MeanParamDistribution(2.0)
        assert d.quantile(d.cdf(k) - 1e-9) <= k

    @pytest.mark.parametrize("u", [-0.1, 1.0])
    def test_quantile_domain(self, u):
        with pytest.raises(ValueError):
            quantile(u, 1.0)


class TestSample:
    def test_empty(self):
        batch = sample(0, 1.0, 5)
        assert len(batch) == 0

    def test_deterministic(self):
        a = sample(1000, 1.5, 2**63 + 7)
        b = sample(1000, 1.5, 2**63 + 7)
        assert np.array_equal(a.values, b.values)
        assert a.seed == 2**63 + 7

    def test_distinct_seeds_differ(self):
        assert not np.array_equal(sample(500, 1.0, 1).values, sample(500, 1.0, 2).values)

    def test_matches_scalar_quantile(self):
        batch = sample(200, 0.7, 11)
        u = np.random.default_rng(11).random(200)
        assert batch.values.tolist() == [quantile(float(v), 0.7) for v in u]

    def test_frequencies(self):
        batch = sample(200_000, 0.5, 3)
        counts = np.bincount(batch.values, minlength=5)[:5] / 200_000
        for k in range(5):
            p = pmf(k, 0.5)
            assert abs(counts[k] - p) <= 5 * math.sqrt(p * (1 - p) / 200_000)

    @pytest.mark.parametrize("seed", [-1, 2**64])
    def test_seed_domain(self, seed):
        with pytest.raises(ValueError):
            sample(3, 1.0, seed)

    def test_x_domain(self):
        with pytest.raises(ValueError):
            sample(3, -1.0, 0)


class TestMomentSums:
    @pytest.mark.parametrize("x", XS)
    def test_normalization(self, x):
        assert abs(mean_param.moment_sum(x, 0) - 1) <= 1e-10

    @pytest.mark.parametrize("x", XS)
    def test_mean(self, x):
        assert abs(mean_param.moment_sum(x, 1) - x) <= 1e-8

    @pytest.mark.parametrize("x", XS)
    def test_variance(self, x):
        got = mean_param.moment_sum(x, 2, shift=x)
        assert got == pytest.approx(variance_fn(x), rel=1e-6)
