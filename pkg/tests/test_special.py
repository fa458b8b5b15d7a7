"""Tests for the special-function and combinatorial kernels."""

import math

import numpy as np
import pytest

from glkinar.errors import ConfigurationError, DomainError
from glkinar.special import (
    log_binomial,
    log_gamma,
    log_rising_factorial,
    log_sum_exp,
    stirling_tables,
)

# 40-digit references computed with mpmath.loggamma and frozen here.
LGAMMA_REFERENCES = [
    (0.001, 6.9071788853838536825),
    (0.07, 2.6227537606032154926),
    (0.5, 0.57236494292470008707),
    (0.99, 0.0058548067647097761793),
    (1.0, 0.0),
    (1.5, -0.12078223763524522235),
    (2.0, 0.0),
    (2.5, 0.28468287047291915963),
    (7.1, 6.7672934793847707825),
    (10.5, 13.940625219403763633),
    (23.4, 49.72015448221127901),
    (152.2, 611.04163512896768742),
    (1000.0, 5905.2204232091812118),
    (36000.5, 341686.7907651526912),
    (1000000.0, 12815504.56914761166),
]


class TestLogGamma:
    @pytest.mark.parametrize("x,expected", LGAMMA_REFERENCES)
    def test_reference_values(self, x, expected):
        got = log_gamma(x)
        assert got == pytest.approx(expected, rel=1e-13, abs=1e-14)

    def test_one_is_zero(self):
        assert log_gamma(1.0) == pytest.approx(0.0, abs=1e-14)

    def test_half_is_log_sqrt_pi(self):
        assert log_gamma(0.5) == pytest.approx(math.log(math.sqrt(math.pi)),
                                               rel=1e-14)

    def test_product_expansion_oracle(self):
        # Gamma(10.5) = 9.5 * 8.5 * ... * 0.5 * sqrt(pi)
        product = 1.0
        v = 9.5
        while v > 0:
            product *= v
            v -= 1.0
        assert log_gamma(10.5) == pytest.approx(
            math.log(product * math.sqrt(math.pi)), rel=1e-14)

    @pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
    def test_domain(self, bad):
        with pytest.raises(DomainError):
            log_gamma(bad)

    def test_vectorized_matches_scalar(self):
        xs = np.array([0.3, 1.0, 2.7, 55.5, 1.0e5])
        vec = log_gamma(xs)
        for x, v in zip(xs, vec):
            assert v == log_gamma(float(x))

    def test_recurrence(self):
        # ln Gamma(x+1) = ln Gamma(x) + ln x across the series cutoff
        for x in (0.2, 1.7, 5.0, 12.9, 13.1, 200.0):
            assert log_gamma(x + 1.0) == pytest.approx(
                log_gamma(x) + math.log(x), rel=1e-13, abs=1e-13)


class TestLogRisingFactorial:
    def test_empty_product(self):
        assert log_rising_factorial(2.0, 0) == 0.0

    def test_small_integer_case(self):
        assert log_rising_factorial(2.0, 3) == pytest.approx(math.log(24.0),
                                                             rel=1e-14)

    def test_direct_product_oracle(self):
        expected = 4.0231004084999130706  # ln(0.7 * 1.7 * 2.7 * 3.7 * 4.7)
        assert log_rising_factorial(0.7, 5) == pytest.approx(expected, rel=1e-14)

    def test_matches_gamma_difference(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            x = float(rng.uniform(0.1, 100.0))
            k = int(rng.integers(0, 201))
            diff = log_gamma(x + k) - log_gamma(x)
            assert log_rising_factorial(x, k) == pytest.approx(diff, abs=1e-10)

    @pytest.mark.parametrize("x,k", [(0.0, 1), (-2.0, 3)])
    def test_domain_x(self, x, k):
        with pytest.raises(DomainError):
            log_rising_factorial(x, k)

    @pytest.mark.parametrize("k", [-1, 2.5])
    def test_domain_k(self, k):
        with pytest.raises(DomainError):
            log_rising_factorial(1.0, k)


class TestLogBinomial:
    def test_values(self):
        assert log_binomial(5, 2) == pytest.approx(math.log(10), rel=1e-14)
        assert log_binomial(10, 0) == pytest.approx(0.0, abs=1e-13)

    def test_domain(self):
        with pytest.raises(DomainError):
            log_binomial(3, 4)


class TestLogSumExp:
    def test_singleton(self):
        assert log_sum_exp([0.0]) == pytest.approx(0.0, abs=1e-15)

    def test_probabilities_summing_to_one(self):
        vals = [math.log(0.25), math.log(0.25), math.log(0.5)]
        assert log_sum_exp(vals) == pytest.approx(0.0, abs=1e-15)

    def test_no_underflow(self):
        vals = np.full(1000, math.log(1e-300))
        expected = math.log(1000.0) + math.log(1e-300)
        assert log_sum_exp(vals) == pytest.approx(expected, rel=1e-14)

    def test_all_neg_inf(self):
        assert log_sum_exp([-math.inf, -math.inf]) == -math.inf

    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            log_sum_exp([])

    def test_permutation_invariance(self):
        rng = np.random.default_rng(2)
        vals = rng.normal(size=50)
        assert log_sum_exp(vals) == pytest.approx(
            log_sum_exp(vals[::-1]), rel=1e-15)

    def test_translation_covariance(self):
        rng = np.random.default_rng(3)
        vals = rng.normal(size=50)
        for t in (-5.0, 0.3, 100.0):
            assert log_sum_exp(vals + t) == pytest.approx(
                log_sum_exp(vals) + t, rel=1e-13)


class TestStirlingTables:
    def test_base_values(self):
        t = stirling_tables(5)
        assert t.second_kind[3][2] == 3
        assert t.first_kind[3][2] == -3
        assert t.second_kind[4][2] == 7
        assert t.first_kind[4][2] == 11
        assert t.first_kind[0][0] == 1 and t.second_kind[0][0] == 1

    def test_diagonal_and_zero_column(self):
        t = stirling_tables(10)
        for m in range(11):
            assert t.first_kind[m][m] == 1
            assert t.second_kind[m][m] == 1
            if m >= 1:
                assert t.first_kind[m][0] == 0
                assert t.second_kind[m][0] == 0

    def test_recurrences_exact(self):
        t = stirling_tables(30)
        for m in range(30):
            for k in range(1, m + 2):
                s_prev = t.first_kind[m][k] if k <= m else 0
                assert t.first_kind[m + 1][k] == t.first_kind[m][k - 1] - m * s_prev
                S_prev = t.second_kind[m][k] if k <= m else 0
                assert t.second_kind[m + 1][k] == t.second_kind[m][k - 1] + k * S_prev

    def test_falling_factorial_identity(self):
        # sum_k S(m, k) * x_(k) = x^m for small integer x
        t = stirling_tables(8)
        for m in (3, 5, 8):
            for x in (2, 3, 7):
                total = 0
                for k in range(m + 1):
                    falling = 1
                    for i in range(k):
                        falling *= x - i
                    total += t.second_kind[m][k] * falling
                assert total == x ** m

    def test_identity_power_five(self):
        t = stirling_tables(5)
        total = sum(t.second_kind[5][k] * math.prod(range(3, 3 - k, -1))
                    for k in range(6))
        assert total == 3 ** 5 == 243

    def test_moment_conversions_roundtrip(self):
        t = stirling_tables(4)
        raw = [1.0, 2.3, 7.9, 31.2, 140.8]
        falling = t.falling_from_raw(raw)
        back = t.raw_from_falling(falling)
        assert back == pytest.approx(raw, rel=1e-12)

    @pytest.mark.parametrize("bad", [0, -3, 31, 2.5])
    def test_order_validation(self, bad):
        with pytest.raises(ConfigurationError):
            stirling_tables(bad)

    def test_cached_instance(self):
        assert stirling_tables(12) is stirling_tables(12)
