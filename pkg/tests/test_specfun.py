import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tensorpot.specfun import (
    erf,
    erfc,
    erfcx,
    faddeeva_scaled,
    laguerre,
    laguerre_table,
    lower_gamma_scaled,
    lower_incomplete_gamma,
)

mp.mp.dps = 40


@pytest.mark.parametrize("x", [0.5, 2.0, 10.0])
def test_gamma_a1_is_one_minus_exp(x):
    assert lower_incomplete_gamma(1.0, x) == pytest.approx(1 - math.exp(-x), rel=1e-14)


@pytest.mark.parametrize("a", [0.1, 0.5, 1.0, 3.5, 20.0])
def test_gamma_at_zero(a):
    assert lower_incomplete_gamma(a, 0.0) == 0.0


def test_gamma_half_at_one_against_quadrature():
    oracle = mp.quad(lambda t: t ** mp.mpf(-0.5) * mp.exp(-t), [0, 1])
    assert lower_incomplete_gamma(0.5, 1.0) == pytest.approx(float(oracle), rel=1e-14)
    assert float(oracle) == pytest.approx(math.sqrt(math.pi) * math.erf(1.0), rel=1e-15)


@pytest.mark.parametrize("a,x", [(0.5, 1e-6), (1.5, 0.3), (2.0, 3.0), (3.5, 40.0), (6.0, 6.5), (0.5, 700.0)])
def test_gamma_against_mpmath(a, x):
    assert lower_incomplete_gamma(a, x) == pytest.approx(float(mp.gammainc(a, 0, x)), rel=1e-13)


def test_gamma_limit_is_complete_gamma():
    assert lower_incomplete_gamma(2.5, 200.0) == pytest.approx(math.gamma(2.5), rel=1e-15)


def test_gamma_domain_errors():
    with pytest.raises(ValueError):
        lower_incomplete_gamma(0.0, 1.0)
    with pytest.raises(ValueError):
        lower_incomplete_gamma(1.0, -1.0)


def test_gamma_vectorized_shape():
    x = np.linspace(0, 5, 7).reshape(7, 1)
    assert np.shape(lower_incomplete_gamma(1.5, x)) == (7, 1)


@given(st.integers(1, 12), st.floats(0.0, 50.0))
def test_gamma_recurrence(n, x):
    a = n / 2
    lhs = lower_incomplete_gamma(a + 1, x)
    first = a * lower_incomplete_gamma(a, x)
    rhs = first - math.exp(-x) * x**a
    # the right side cancels at small x, so measure against its larger term
    assert abs(lhs - rhs) <= 1e-13 * max(abs(lhs), first) + 1e-300


@given(st.floats(1e-8, 100.0))
def test_gamma_half_is_erf(x):
    assert lower_incomplete_gamma(0.5, x) == pytest.approx(math.sqrt(math.pi) * math.erf(math.sqrt(x)), rel=1e-13)


@given(st.floats(0.1, 20.0), st.floats(0.0, 300.0))
def test_gamma_monotone_in_x(a, x):
    assert lower_incomplete_gamma(a, x + 0.5) >= lower_incomplete_gamma(a, x)


@pytest.mark.parametrize("a,x", [(0.5, 0.0), (0.5, 1e-3), (1.0, 4.0), (2.0, 1e3)])
def test_scaled_gamma(a, x):
    expect = 1 / a if x == 0 else float(mp.gammainc(a, 0, x) / mp.mpf(x) ** a)
    assert lower_gamma_scaled(a, x) == pytest.approx(expect, rel=1e-13)


def test_erf_values():
    assert erf(0.0) == 0.0
    assert erfc(0.0) == 1.0
    oracle = 2 / mp.sqrt(mp.pi) * mp.quad(lambda t: mp.exp(-t * t), [0, 1])
    assert erf(1.0) == pytest.approx(float(oracle), rel=1e-15)


@given(st.floats(-30.0, 30.0))
def test_erf_complement_and_odd(x):
    assert erf(x) + erfc(x) == pytest.approx(1.0, abs=2.3e-16)
    assert erf(-x) == -erf(x)


def test_faddeeva_imaginary_axis():
    assert faddeeva_scaled(0j) == pytest.approx(1.0)
    assert faddeeva_scaled(0.5j).real == pytest.approx(math.exp(0.25) * math.erfc(0.5), rel=1e-15)
    oracle = mp.exp(100) * mp.erfc(10)
    assert faddeeva_scaled(10j).real == pytest.approx(float(oracle), rel=1e-14)


def test_faddeeva_overflow_reported():
    with pytest.raises(OverflowError):
        faddeeva_scaled(-40j)


@given(st.floats(0.0, 1000.0))
def test_faddeeva_positive_decreasing(y):
    w0 = faddeeva_scaled(complex(0, y)).real
    w1 = faddeeva_scaled(complex(0, y + 0.1)).real
    assert w0 > 0 and w1 < w0
    assert w0 == pytest.approx(erfcx(y), rel=1e-14)


def test_laguerre_low_degrees():
    y = np.linspace(0, 5, 11)
    assert np.all(laguerre(0, 2.7, y) == 1.0)
    np.testing.assert_allclose(laguerre(1, -0.5, y), 0.5 - y, rtol=1e-15, atol=1e-15)


def test_laguerre_exact_rational():
    # L_3^(3/2)(2) from the explicit sum with exact binomials
    g, y = mp.mpf(3) / 2, mp.mpf(2)
    exact = sum((-1) ** i * mp.binomial(3 + g, 3 - i) * y**i / mp.factorial(i) for i in range(4))
    assert laguerre(3, 1.5, 2.0) == pytest.approx(float(exact), rel=1e-15)


@given(st.integers(1, 8), st.floats(-0.9, 5.0), st.floats(0.0, 40.0))
def test_laguerre_three_term(k, g, y):
    L = laguerre_table(k + 1, g, y)
    lhs = (k + 1) * L[k + 1]
    rhs = (2 * k + g + 1 - y) * L[k] - (k + g) * L[k - 1]
    if abs(L[k + 1]) > 1:
        assert lhs == pytest.approx(rhs, rel=1e-12)
    assert float(L[k]) == pytest.approx(float(mp.laguerre(k, g, y)), rel=1e-11, abs=1e-11)
