"""Potential actions on Gaussian-type generating functions.

Three routes to the same numbers:

* closed forms (harmonic action of ``eta_2M`` through the incomplete gamma
  function, the n = 3 Yukawa action of ``exp(-|x|^2)`` through ``w(z)``);
* one-dimensional integrals over ``t in (0, inf)`` (``I_1``, ``I_M``,
  ``K_1``, ``K_M``) after a doubly exponential change of variables;
* the same integrals written over ``w in (0, 1]`` with ``1 + t = w^-2``,
  used by the adaptive reference quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .subst import SubstChain, softplus
from .specfun import erfc, erfcx, laguerre, laguerre_table, lower_gamma_scaled

__all__ = [
    "PotentialSpec",
    "Family",
    "harmonic_action_exact",
    "harmonic_action_r2",
    "integrand_table",
    "I1_integrand",
    "IM_integrand",
    "K1_integrand",
    "KM_integrand",
    "w_integrand",
    "yukawa_gaussian_closed_form_3d",
    "yukawa_log_closed_form_3d",
    "I1_closed_form",
    "I1_log_closed_form",
    "w_log_envelope",
]


@dataclass(frozen=True)
class PotentialSpec:
    """Operator ``-Laplace`` (harmonic) or ``-Laplace + a^2`` (yukawa) in ``R^n``."""

    operator: Literal["harmonic", "yukawa"] = "harmonic"
    n: int = 3
    M: int = 1
    a: float = 0.0

    def __post_init__(self):
        if self.operator == "harmonic":
            if self.n < 3:
                raise ValueError("harmonic potential needs n >= 3")
        elif self.operator == "yukawa":
            if self.n < 2:
                raise ValueError("yukawa potential needs n >= 2")
            if not self.a > 0:
                raise ValueError("yukawa parameter a must be positive")
        else:
            raise ValueError(f"unknown operator {self.operator!r}")
        if self.M < 1:
            raise ValueError("M must be >= 1")

    def family(self) -> "Family":
        yuk = self.operator == "yukawa"
        if self.M == 1:
            return Family("K1" if yuk else "I1", 1, self.a if yuk else 0.0)
        return Family("KM" if yuk else "IM", self.M, self.a if yuk else 0.0)


@dataclass(frozen=True)
class Family:
    """One of the parameter-dependent integrals over ``t in (0, inf)``.

    ``I1``: ``(1+t)^(-n/2) exp(-|x|^2/(1+t))``
    ``IM``: ``prod_j exp(-x_j^2/(1+t)) sum_{k<M} L_k^(-1/2)(x_j^2/(1+t)) (1+t)^(-k-1/2)``
    ``K1``/``KM``: the same times ``exp(-a^2 t / 4)``.
    """

    name: Literal["I1", "IM", "K1", "KM"]
    M: int = 1
    a: float = 0.0

    def __post_init__(self):
        if self.name not in ("I1", "IM", "K1", "KM"):
            raise ValueError(f"unknown integral family {self.name!r}")
        if self.name in ("I1", "K1") and self.M != 1:
            object.__setattr__(self, "M", 1)
        if self.name in ("K1", "KM") and not self.a > 0:
            raise ValueError("yukawa families need a > 0")

    @property
    def yukawa(self) -> bool:
        return self.name in ("K1", "KM")

    def label(self) -> str:
        if self.name == "I1":
            return "I1"
        if self.name == "IM":
            return f"IM({self.M})"
        if self.name == "K1":
            return f"K1(a2={self.a**2:g})"
        return f"KM({self.M},a2={self.a**2:g})"


def _as_points(x, n: int | None) -> np.ndarray:
    """Coerce to an array of points of shape (P, n). A scalar is read as |x| along the diagonal."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        if n is None:
            raise ValueError("dimension n is required when x is given as a norm")
        return np.full((1, n), float(x) / math.sqrt(n))
    if x.ndim == 1:
        if n is not None and x.shape[0] != n:
            raise ValueError(f"point of length {x.shape[0]} given for n={n}")
        return x[None, :]
    return x


# ---------------------------------------------------------------------------
# closed forms


def harmonic_action_r2(r2, M: int, n: int, D: float = 1.0):
    """Vectorized harmonic action of ``eta_2M`` at ``k / sqrt(D)`` given ``|k|^2``.

    Equals ``pi^(-n/2) [ gamma(n/2-1, rho) rho^(1-n/2) / 4
    + exp(-rho) sum_{j<=M-2} L_j^(n/2-1)(rho) / (4 (j+1)) ]`` with ``rho = |k|^2 / D``.
    ``gamma(a, rho) rho^-a`` is evaluated by its series near the origin,
    so ``k = 0`` needs no special branch.
    """
    if n < 3:
        raise ValueError("harmonic action needs n >= 3")
    rho = np.asarray(r2, dtype=float) / D
    a = n / 2 - 1
    val = lower_gamma_scaled(a, rho) / 4.0
    if M >= 2:
        L = laguerre_table(M - 2, a, rho)
        corr = sum(L[j] / (4.0 * (j + 1)) for j in range(M - 1))
        val = val + np.exp(-rho) * corr
    return math.pi ** (-n / 2) * val


def harmonic_action_exact(x, M: int, n: int, D: float = 1.0) -> float:
    """Harmonic potential of ``eta_2M`` evaluated at ``x / sqrt(D)`` (``x`` a point of ``R^n``)."""
    x = np.asarray(x, dtype=float)
    r2 = float(np.dot(x, x)) if x.ndim else float(x) ** 2
    return float(harmonic_action_r2(r2, M, n, D))


def I1_closed_form(r, n: int):
    """``I_1(x) = gamma(n/2-1, |x|^2) / |x|^(n-2)``; ``2/(n-2)`` at the origin."""
    r = np.asarray(r, dtype=float)
    return lower_gamma_scaled(n / 2 - 1, r * r)


def I1_log_closed_form(r, n: int):
    """``log I_1`` at norms ``r``."""
    return np.log(I1_closed_form(r, n))


def yukawa_log_closed_form_3d(r, a: float):
    """``log`` of :func:`yukawa_gaussian_closed_form_3d` at norms ``r``, free of underflow."""
    if not a > 0:
        raise ValueError("yukawa parameter a must be positive")
    r = np.atleast_1d(np.asarray(r, dtype=float))
    c = 0.5 * a
    out = np.empty_like(r)
    small = r < 1e-4
    if small.any():
        out[small] = np.log(yukawa_gaussian_closed_form_3d(r[small][:, None], a))
    rl = r[~small]
    cm = c - rl
    with np.errstate(divide="ignore"):
        log_first = np.where(
            cm >= 0,
            -rl * rl + np.log(erfcx(np.maximum(cm, 0.0))),
            c * c - a * rl + np.log(erfc(np.minimum(cm, 0.0))),
        )
        log_second = -rl * rl + np.log(erfcx(c + rl))
    out[~small] = (
        math.log(math.sqrt(math.pi) / 8) - np.log(rl) + log_first + np.log1p(-np.exp(log_second - log_first))
    )
    return out


def yukawa_gaussian_closed_form_3d(x, a: float):
    r"""Yukawa potential of ``exp(-|y|^2)`` in ``R^3``.

    .. math::

        f(x) = \frac{\sqrt\pi}{8} \frac{e^{-r^2}}{r}
               \bigl( w(i(a/2 - r)) - w(i(a/2 + r)) \bigr), \quad r = |x|,

    with ``w(iy) = erfcx(y)``. For ``a/2 - r < 0`` the first product is
    rewritten as ``exp(a^2/4 - a r) erfc(a/2 - r)`` so nothing overflows.
    Below ``r = 1e-4`` the odd difference is replaced by its Taylor series.
    """
    if not a > 0:
        raise ValueError("yukawa parameter a must be positive")
    x = np.asarray(x, dtype=float)
    r = np.sqrt(np.sum(x * x, axis=-1)) if x.ndim >= 1 else np.abs(x)
    r = np.asarray(r, dtype=float)
    c = 0.5 * a
    out = np.empty_like(r)

    small = r < 1e-4
    rs = r[small]
    E = erfcx(c)
    E1 = 2 * c * E - 2 / math.sqrt(math.pi)
    E2 = 2 * E + 2 * c * E1
    E3 = 4 * E1 + 2 * c * E2
    out[small] = -(math.sqrt(math.pi) / 4) * np.exp(-rs * rs) * (E1 + E3 * rs * rs / 6)

    rl = r[~small]
    cm = c - rl
    first = np.where(cm >= 0, np.exp(-rl * rl) * erfcx(np.maximum(cm, 0)),
                     np.exp(c * c - a * np.maximum(rl, c)) * erfc(np.minimum(cm, 0)))
    second = np.exp(-rl * rl) * erfcx(c + rl)
    out[~small] = math.sqrt(math.pi) / 8 * (first - second) / rl
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# transformed integrands


def _factor_poly(X2: np.ndarray, inv: np.ndarray, M: int) -> np.ndarray:
    """``prod_j sum_{k<M} L_k^(-1/2)(x_j^2 inv) inv^k``, shape (P, N)."""
    P = X2.shape[0]
    out = np.ones((P, inv.shape[0]))
    if M == 1:
        return out
    for j in range(X2.shape[1]):
        y = X2[:, j][:, None] * inv[None, :]
        L = laguerre_table(M - 1, -0.5, y)
        s = L[M - 1]
        for k in range(M - 2, -1, -1):
            s = L[k] + inv[None, :] * s
        out *= s
    return out


def integrand_table(family: Family, n: int, subst: SubstChain, u, X, log_shift=None) -> np.ndarray:
    """Transformed integrand ``f(u, x)`` for every point in ``X`` (P, n) and node in ``u`` (N,).

    Returns an array of shape (P, N). Underflow in the far tails gives exact zeros.
    With ``log_shift`` (P,) each row is multiplied by ``exp(-log_shift)`` before
    exponentiation, so integrals of size ``exp(-1000)`` stay representable.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    X = _as_points(X, n)
    logt = subst.log_t(u)
    logj = subst.log_jacobian(u)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        logs = softplus(logt)
        inv = np.exp(-logs)
        r2 = np.sum(X * X, axis=1)
        env = logj[None, :] - 0.5 * n * logs[None, :] - r2[:, None] * inv[None, :]
        if family.yukawa:
            env = env - 0.25 * family.a**2 * np.exp(logt)[None, :]
        if log_shift is not None:
            env = env - np.asarray(log_shift, dtype=float).reshape(-1, 1)
        vals = np.exp(env)
        vals[:, ~np.isfinite(logt)] = 0.0
        vals = np.nan_to_num(vals, nan=0.0, posinf=0.0)
    if family.M > 1:
        vals *= _factor_poly(X * X, inv, family.M)
    return vals


def I1_integrand(u, x, n: int, subst: SubstChain):
    """Integrand of ``I_1`` after the substitution ``subst`` (``x`` a point or its norm)."""
    return integrand_table(Family("I1"), n, subst, u, _as_points(x, n))[0]


def IM_integrand(u, x, M: int, subst: SubstChain):
    """Integrand of ``I_M``; the Jacobian ``dt/du`` enters once, not once per axis."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return integrand_table(Family("IM", M), x.shape[0], subst, u, x[None, :])[0]


def K1_integrand(u, x, a_yukawa: float, n: int, b: float):
    """Integrand of ``K_1`` after ``t = exp(b (u - e^-u))``."""
    return integrand_table(Family("K1", 1, a_yukawa), n, SubstChain.single(b), u, _as_points(x, n))[0]


def KM_integrand(u, x, M: int, a_yukawa: float, b: float):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    fam = Family("KM", M, a_yukawa)
    return integrand_table(fam, x.shape[0], SubstChain.single(b), u, x[None, :])[0]


def w_log_envelope(family: Family, n: int, w, r2) -> np.ndarray:
    """Log of the positive envelope of :func:`w_integrand` (without the Laguerre factor), shape (P, N)."""
    w = np.atleast_1d(np.asarray(w, dtype=float))
    r2 = np.atleast_1d(np.asarray(r2, dtype=float))
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        lw = np.log(w)
        base = math.log(2.0) + (n - 3) * lw
        if n == 3:
            base = np.full_like(w, math.log(2.0))
        if family.yukawa:
            base = base - 0.25 * family.a**2 * (1.0 / (w * w) - 1.0)
        env = base[None, :] - r2[:, None] * (w * w)[None, :]
    return np.nan_to_num(env, nan=-np.inf, posinf=-np.inf)


def w_integrand(family: Family, n: int, w, X, log_shift=None) -> np.ndarray:
    """The same integral over ``w in (0, 1]`` with ``1 + t = w^-2``.

    ``I(x) = int_0^1 2 w^(n-3) prod_j [exp(-x_j^2 w^2) sum_k w^(2k) L_k(x_j^2 w^2)] dw``
    (times ``exp(-a^2 (w^-2 - 1)/4)`` for the Yukawa families). Smooth on
    ``[0, 1]`` for ``n >= 3``. Shape (P, N).
    """
    w = np.atleast_1d(np.asarray(w, dtype=float))
    X = _as_points(X, n)
    w2 = w * w
    env = w_log_envelope(family, n, w, np.sum(X * X, axis=1))
    if log_shift is not None:
        env = env - np.asarray(log_shift, dtype=float).reshape(-1, 1)
    with np.errstate(over="ignore"):
        vals = np.exp(env)
    if family.M > 1:
        vals *= _factor_poly(X * X, w2, family.M)
    return vals
