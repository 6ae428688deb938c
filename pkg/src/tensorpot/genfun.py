"""Laguerre-Gaussian generating functions and quasi-interpolation on ``h Z^n``."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np

from .grid import GridDensity
from .specfun import laguerre

__all__ = [
    "GenFunOrder",
    "ShapeParams",
    "eta_2M",
    "eta_tilde_2M",
    "eta_tilde_2M_laguerre_sum",
    "truncation_radius",
    "quasi_interpolant",
    "moment_defect",
    "saturation_defect",
    "TruncationWarning",
]

_MAX_ORDER = 8


class TruncationWarning(UserWarning):
    """A lattice sum was cut off where its terms are not yet negligible."""


@dataclass(frozen=True)
class GenFunOrder:
    """Spatial half-order ``M`` and, for the heat solver, temporal half-order ``S``."""

    M: int = 1
    S: int = 1

    def __post_init__(self):
        for name in ("M", "S"):
            v = getattr(self, name)
            if not 1 <= v <= _MAX_ORDER:
                raise ValueError(f"{name} must lie in [1, {_MAX_ORDER}], got {v}")


@dataclass(frozen=True)
class ShapeParams:
    """Spatial shape ``D`` and temporal shape ``D0`` of the generating Gaussians."""

    D: float = 2.0
    D0: float = 2.0

    def __post_init__(self):
        if not (self.D > 0 and self.D0 > 0):
            raise ValueError("shape parameters D and D0 must be positive")


def eta_2M(x_norm_sq, M: int, n: int):
    """Radial generating function ``pi^(-n/2) L_{M-1}^{(n/2)}(|x|^2) exp(-|x|^2)``."""
    if M < 1 or n < 1:
        raise ValueError("eta_2M needs M >= 1 and n >= 1")
    y = np.asarray(x_norm_sq, dtype=float)
    return math.pi ** (-n / 2) * laguerre(M - 1, n / 2, y) * np.exp(-y)


def eta_tilde_2M(x, M: int):
    """One-dimensional generating function ``L_{M-1}^{(1/2)}(x^2) exp(-x^2)``."""
    if M < 1:
        raise ValueError("eta_tilde_2M needs M >= 1")
    y = np.square(np.asarray(x, dtype=float))
    return laguerre(M - 1, 0.5, y) * np.exp(-y)


def eta_tilde_2M_laguerre_sum(x, M: int):
    """Same function written as ``exp(-x^2) sum_{k<M} L_k^{(-1/2)}(x^2)``."""
    y = np.square(np.asarray(x, dtype=float))
    total = np.zeros_like(y)
    for k in range(M):
        total = total + laguerre(k, -0.5, y)
    return total * np.exp(-y)


@lru_cache(maxsize=None)
def truncation_radius(M: int, form: str = "tensor", n: int = 1, tol: float = 1e-16) -> float:
    """Smallest ``r`` beyond which the generating-function profile stays below ``tol``."""
    r = np.arange(0.0, 40.0, 0.01)
    if form == "tensor":
        prof = np.abs(laguerre(M - 1, 0.5, r * r)) * np.exp(-r * r)
    else:
        prof = np.abs(laguerre(M - 1, n / 2, r * r)) * np.exp(-r * r)
    big = np.nonzero(prof >= tol)[0]
    return float(r[big[-1] + 1])


def quasi_interpolant(
    density: GridDensity,
    params: ShapeParams,
    order: GenFunOrder,
    x,
    form: Literal["tensor", "radial"] = "tensor",
) -> float:
    """Evaluate the quasi-interpolant of the sampled density at a point ``x``.

    ``tensor`` uses the product of one-dimensional ``eta_tilde_2M`` with
    normalization ``(pi D)^(-n/2)``; ``radial`` uses ``eta_2M`` with
    ``D^(-n/2)``. Lattice points farther than the truncation radius (in
    units of ``sqrt(D) h``) are skipped. A :class:`TruncationWarning` is
    issued when the box edge cuts through a still-significant part of the
    generating function.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = density.n
    if x.shape != (n,):
        raise ValueError(f"point has dimension {x.shape} but density has n={n}")
    M = order.M
    scale = math.sqrt(params.D) * density.h
    rmax = truncation_radius(M, form, n)

    if form == "tensor":
        weights = []
        edge = 0.0
        for j in range(n):
            d = (x[j] - density.axis_coords(j)) / scale
            w = eta_tilde_2M(d, M)
            w[np.abs(d) > rmax] = 0.0
            weights.append(w)
            # generating function one cell outside the box on either side
            out = np.array([d[0] + density.h / scale, d[-1] - density.h / scale])
            edge = max(edge, float(np.max(np.abs(eta_tilde_2M(out, M)))))
        acc = density.values
        for w in weights:
            acc = np.tensordot(w, acc, axes=(0, 0))
        result = float(acc) * (math.pi * params.D) ** (-n / 2)
        if edge > 0:
            bound = edge * float(np.max(np.abs(density.values))) * (math.pi * params.D) ** (-n / 2)
            bound *= np.prod([np.sum(np.abs(w)) for w in weights]) / max(
                min(np.sum(np.abs(w)) for w in weights), 1e-300
            )
            if bound > 1e-14 * abs(result):
                warnings.warn(
                    f"quasi_interpolant: boundary term {bound:.2e} exceeds 1e-14 of result",
                    TruncationWarning,
                    stacklevel=2,
                )
        return result

    if form != "radial":
        raise ValueError(f"unknown generating-function form {form!r}")
    mesh = np.meshgrid(*[(x[j] - density.axis_coords(j)) / scale for j in range(n)], indexing="ij")
    r2 = sum(m * m for m in mesh)
    eta = eta_2M(r2, M, n)
    eta[r2 > rmax * rmax] = 0.0
    result = float(np.sum(density.values * eta)) * params.D ** (-n / 2)
    face = np.zeros_like(r2, dtype=bool)
    for j in range(n):
        sl = [slice(None)] * n
        sl[j] = 0
        face[tuple(sl)] = True
        sl[j] = -1
        face[tuple(sl)] = True
    bound = float(np.max(np.abs(density.values * eta)[face])) * params.D ** (-n / 2)
    if bound > 1e-14 * abs(result):
        warnings.warn(
            f"quasi_interpolant: boundary term {bound:.2e} exceeds 1e-14 of result",
            TruncationWarning,
            stacklevel=2,
        )
    return result


def moment_defect(M: int, up_to: int) -> np.ndarray:
    """Moments ``int x^alpha eta_tilde_2M(x) dx`` for ``alpha = 0..up_to``.

    Trapezoidal rule on ``[-12, 12]`` with step ``1e-3``, summed with
    :func:`math.fsum`. Entry 0 is ``sqrt(pi)``; entries ``1..2M-1`` vanish.
    """
    if up_to > 2 * M - 1:
        raise ValueError("moments are only controlled up to order 2M-1")
    step = 1e-3
    x = np.linspace(-12.0, 12.0, 24001)
    eta = eta_tilde_2M(x, M)
    return np.array([step * math.fsum(x**alpha * eta) for alpha in range(up_to + 1)])


def saturation_defect(params: ShapeParams, order: GenFunOrder, n: int = 1, samples: int = 64) -> float:
    """Sup over a cell of ``|M_h 1 - 1|`` for the tensor quasi-interpolant of ``u = 1``.

    Independent of ``h``; this is the saturation level of the scheme.
    """
    rmax = truncation_radius(order.M, "tensor", 1)
    half = int(math.ceil(rmax * math.sqrt(params.D))) + 2
    m = np.arange(-half, half + 1)
    worst = 0.0
    for s in np.linspace(0.0, 1.0, samples, endpoint=False):
        one_d = float(np.sum(eta_tilde_2M((s - m) / math.sqrt(params.D), order.M)))
        one_d /= math.sqrt(math.pi * params.D)
        worst = max(worst, abs(one_d**n - 1.0))
    return worst
