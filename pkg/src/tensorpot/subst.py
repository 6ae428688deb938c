"""Doubly exponential changes of variables mapping ``R`` onto ``(0, inf)``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

__all__ = ["SubstChain", "softplus"]


def softplus(z):
    """``log(1 + exp(z))`` without overflow."""
    return np.logaddexp(0.0, z)


@dataclass(frozen=True)
class SubstChain:
    """Map ``u in R -> t in (0, inf)`` with doubly exponential decay at both ends.

    ``waldvogel``: ``t = e^xi``, ``xi = a (s + e^s)``, ``s = b (u - e^-u)``.
    ``single``:    ``t = exp(b (u - e^-u))``.

    Values are returned as ``log t`` and ``log(dt/du)`` because ``t`` itself
    overflows long before the transformed integrands become negligible.
    """

    kind: Literal["waldvogel", "single"] = "waldvogel"
    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if self.kind not in ("waldvogel", "single"):
            raise ValueError(f"unknown substitution kind {self.kind!r}")
        if not (self.a > 0 and self.b > 0):
            raise ValueError("substitution constants a, b must be positive")

    @classmethod
    def waldvogel(cls, a: float = 1.0, b: float = 1.0) -> "SubstChain":
        return cls("waldvogel", a, b)

    @classmethod
    def single(cls, b: float = 1.0) -> "SubstChain":
        return cls("single", 1.0, b)

    def label(self) -> str:
        return f"waldvogel({self.a:g},{self.b:g})" if self.kind == "waldvogel" else f"single({self.b:g})"

    def log_t(self, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(over="ignore"):
            s = self.b * (u - np.exp(-u))
            if self.kind == "single":
                return s
            return self.a * (s + np.exp(s))

    def log_jacobian(self, u):
        """``log(dt/du)``; may be ``-inf`` (underflow) at the far ends, never ``nan``."""
        u = np.asarray(u, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            s = self.b * (u - np.exp(-u))
            ds = math.log(self.b) + softplus(-u)
            if self.kind == "single":
                out = s + ds
            else:
                out = self.a * (s + np.exp(s)) + math.log(self.a) + softplus(s) + ds
        return np.where(np.isnan(out), -np.inf, out)

    def t(self, u):
        with np.errstate(over="ignore"):
            return np.exp(self.log_t(u))
