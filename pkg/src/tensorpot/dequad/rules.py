"""Doubly-exponential substitutions and the truncated trapezoidal rule."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..subst import SubstChain, softplus

__all__ = [
    "SubstChain",
    "QuadratureRule",
    "NonFiniteIntegrandError",
    "NonDecayingIntegrandError",
    "softplus",
    "trapezoid",
    "truncation_bounds",
]

U_LIMIT = 60.0


class NonFiniteIntegrandError(FloatingPointError):
    """The integrand returned inf/nan at a quadrature node."""

    def __init__(self, u: float, value: float):
        super().__init__(f"integrand is not finite at u={u!r} (value {value!r})")
        self.u = u
        self.value = value


class NonDecayingIntegrandError(RuntimeError):
    """No truncation satisfying the tail tolerance exists within |u| <= 60."""


@dataclass(frozen=True)
class QuadratureRule:
    """Trapezoid nodes ``u_k = h k`` for ``k = -n0 .. n1`` with weights ``h``.

    ``n0`` may be negative when the significant part of the integrand lies
    entirely at positive ``u`` (the window then starts at ``k = -n0 > 0``).
    """

    h: float
    n0: int
    n1: int

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("step must be positive")
        if -self.n0 > self.n1:
            raise ValueError("empty node window")

    @property
    def k(self) -> np.ndarray:
        return np.arange(-self.n0, self.n1 + 1)

    @property
    def nodes(self) -> np.ndarray:
        return self.h * self.k

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.node_count, self.h)

    @property
    def node_count(self) -> int:
        return self.n0 + self.n1 + 1


def trapezoid(integrand: Callable[[np.ndarray], np.ndarray], rule: QuadratureRule) -> float:
    """``h * sum_k f(h k)`` over the rule's window, summed in ascending ``k``.

    ``integrand`` is called once with the full node array.

    Raises
    ------
    NonFiniteIntegrandError
        At the first node where the integrand is inf or nan.
    """
    u = rule.nodes
    f = np.asarray(integrand(u), dtype=float)
    bad = ~np.isfinite(f)
    if bad.any():
        i = int(np.argmax(bad))
        raise NonFiniteIntegrandError(float(u[i]), float(f[i]))
    total = 0.0
    for v in f:
        total += v
    return rule.h * total


def truncation_bounds(
    integrand: Callable[[np.ndarray], np.ndarray], h: float, tail_tol: float
) -> tuple[int, int]:
    """Smallest window ``[-N0, N1]`` whose discarded neighbours are negligible.

    The integrand is sampled on ``|u| <= 60``. Starting from the largest
    node value, each end is extended until the next three node values are
    all below ``tail_tol * |sum of all node values|``.

    Raises
    ------
    NonDecayingIntegrandError
        If one end never meets the criterion inside ``|u| <= 60``.
    """
    K = int(U_LIMIT / h)
    k = np.arange(-K, K + 1)
    f = np.abs(np.asarray(integrand(h * k), dtype=float))
    if not np.all(np.isfinite(f)):
        raise NonFiniteIntegrandError(float(h * k[~np.isfinite(f)][0]), float("nan"))
    total = f.sum()
    thresh = tail_tol * (total + 1e-300)
    small = f < thresh
    peak = int(np.argmax(f))

    hi = None
    for i in range(peak, len(k) - 3):
        if small[i + 1] and small[i + 2] and small[i + 3]:
            hi = i
            break
    lo = None
    for i in range(peak, 2, -1):
        if small[i - 1] and small[i - 2] and small[i - 3]:
            lo = i
            break
    if hi is None or lo is None:
        raise NonDecayingIntegrandError(
            f"integrand does not decay below {tail_tol:g} of its sum within |u| <= {U_LIMIT}"
        )
    return int(-k[lo]), int(k[hi])
