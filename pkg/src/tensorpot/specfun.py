"""Scalar special functions used by the kernel formulas.

The lower incomplete gamma function is evaluated here (series below
``x = a + 1``, Lentz continued fraction above). Error functions and the
Faddeeva function are thin wrappers around :mod:`scipy.special`.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special as _sp

__all__ = [
    "lower_incomplete_gamma",
    "lower_gamma_scaled",
    "erf",
    "erfc",
    "erfcx",
    "faddeeva_scaled",
    "laguerre",
    "laguerre_table",
]

_EPS = 1e-17
_MAX_ITER = 10_000
_TINY = 1e-300


def _gamma_series_scaled(a: float, x: float) -> float:
    # gamma(a, x) * x**-a * e**x  =  sum_k x**k / (a (a+1) ... (a+k))
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            return total
    raise ArithmeticError(f"incomplete gamma series did not converge (a={a}, x={x})")


def _upper_gamma_cf(a: float, x: float) -> float:
    """Upper incomplete gamma Gamma(a, x) by modified Lentz, valid for x >= a + 1."""
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return math.exp(a * math.log(x) - x) * h
    raise ArithmeticError(f"incomplete gamma continued fraction did not converge (a={a}, x={x})")


def _lower_gamma_scalar(a: float, x: float) -> float:
    if not a > 0:
        raise ValueError(f"lower_incomplete_gamma requires a > 0, got a={a}")
    if not x >= 0:
        raise ValueError(f"lower_incomplete_gamma requires x >= 0, got x={x}")
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return math.gamma(a)
    if x < a + 1.0:
        return math.exp(a * math.log(x) - x) * _gamma_series_scaled(a, x)
    return math.gamma(a) - _upper_gamma_cf(a, x)


def _lower_gamma_scaled_scalar(a: float, x: float) -> float:
    if not a > 0:
        raise ValueError(f"lower_gamma_scaled requires a > 0, got a={a}")
    if not x >= 0:
        raise ValueError(f"lower_gamma_scaled requires x >= 0, got x={x}")
    if x == 0.0:
        return 1.0 / a
    if x < a + 1.0:
        return math.exp(-x) * _gamma_series_scaled(a, x)
    return _lower_gamma_scalar(a, x) * math.exp(-a * math.log(x))


_lower_gamma_vec = np.vectorize(_lower_gamma_scalar, otypes=[float])
_lower_gamma_scaled_vec = np.vectorize(_lower_gamma_scaled_scalar, otypes=[float])


def lower_incomplete_gamma(a, x):
    r"""Lower incomplete gamma function :math:`\gamma(a, x) = \int_0^x s^{a-1} e^{-s} ds`.

    Parameters
    ----------
    a : float or array_like
        Shape parameter, ``a > 0``.
    x : float or array_like
        Upper limit, ``x >= 0``. ``inf`` gives ``Gamma(a)``.

    Returns
    -------
    float or ndarray

    Raises
    ------
    ValueError
        If ``a <= 0`` or ``x < 0``.
    """
    if np.ndim(a) == 0 and np.ndim(x) == 0:
        return _lower_gamma_scalar(float(a), float(x))
    return _lower_gamma_vec(a, x)


def lower_gamma_scaled(a, x):
    """Return ``gamma(a, x) / x**a``, finite and smooth down to ``x = 0`` where it equals ``1/a``."""
    if np.ndim(a) == 0 and np.ndim(x) == 0:
        return _lower_gamma_scaled_scalar(float(a), float(x))
    return _lower_gamma_scaled_vec(a, x)


def erf(x):
    return _sp.erf(x)


def erfc(x):
    return _sp.erfc(x)


def erfcx(x):
    """Scaled complementary error function ``exp(x**2) * erfc(x)``; equals ``w(i x)``."""
    return _sp.erfcx(x)


def faddeeva_scaled(z):
    """Faddeeva function ``w(z) = exp(-z**2) * erfc(-i z)``.

    Purely imaginary arguments ``z = i y`` are routed through ``erfcx(y)``,
    which is exact on the imaginary axis and is the only region whose
    accuracy the kernels rely on.

    Raises
    ------
    OverflowError
        If the result is not representable (large negative imaginary part).
    """
    z = np.asarray(z, dtype=complex)
    on_axis = z.real == 0.0
    out = np.empty(z.shape, dtype=complex)
    with np.errstate(over="ignore"):
        out[on_axis] = _sp.erfcx(z.imag[on_axis])
        out[~on_axis] = _sp.wofz(z[~on_axis])
    if not np.all(np.isfinite(out)):
        raise OverflowError("faddeeva_scaled: result exceeds floating-point range")
    return out[()] if out.ndim == 0 else out


def laguerre(k: int, gamma: float, y):
    """Generalized Laguerre polynomial ``L_k^(gamma)(y)`` by upward three-term recurrence."""
    if k < 0:
        raise ValueError("laguerre degree must be >= 0")
    if not gamma > -1:
        raise ValueError("laguerre requires gamma > -1")
    y = np.asarray(y, dtype=float)
    prev = np.ones_like(y)
    if k == 0:
        return prev[()] if prev.ndim == 0 else prev
    cur = 1.0 + gamma - y
    for j in range(1, k):
        prev, cur = cur, ((2 * j + 1 + gamma - y) * cur - (j + gamma) * prev) / (j + 1)
    return cur[()] if np.ndim(cur) == 0 else cur


def laguerre_table(kmax: int, gamma: float, y) -> np.ndarray:
    """All degrees ``L_0 .. L_kmax`` stacked along a new leading axis."""
    y = np.asarray(y, dtype=float)
    out = np.empty((kmax + 1,) + y.shape)
    out[0] = 1.0
    if kmax >= 1:
        out[1] = 1.0 + gamma - y
    for j in range(1, kmax):
        out[j + 1] = ((2 * j + 1 + gamma - y) * out[j] - (j + gamma) * out[j - 1]) / (j + 1)
    return out
