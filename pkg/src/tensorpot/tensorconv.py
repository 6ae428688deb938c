"""Rank-R separable cubature of harmonic and Yukawa potentials on ``h Z^n``.

The cubature sum ``sum_m u(hm) a_{k-m}`` has coefficients given by a
one-dimensional integral over ``t``. Replacing that integral by a trapezoidal
rule in the doubly exponential variable ``u`` turns the n-dimensional
coefficient tensor into a sum of ``R`` products of one-dimensional vectors,
so the n-dimensional convolution becomes ``R * n`` one-dimensional ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import signal

from .dequad.rules import QuadratureRule
from .dequad.search import ErrorReport, reference_batch
from .genfun import ShapeParams
from .grid import GridDensity
from .kernels import Family, PotentialSpec, harmonic_action_r2
from .specfun import laguerre_table
from .subst import SubstChain, softplus

__all__ = [
    "SeparableKernel",
    "CubatureResult",
    "build_separable_kernel",
    "apply_separable",
    "apply_direct",
    "direct_coefficients",
    "evaluate_at",
    "evaluate_product_density",
    "convergence_study",
    "ConvergenceTable",
    "DIRECT_POINT_LIMIT",
    "FFT_THRESHOLD",
]

DIRECT_POINT_LIMIT = 10**6
FFT_THRESHOLD = 256
_TAIL = 1e-16


@dataclass
class SeparableKernel:
    """``sum_r weights[r] * prod_j profiles[r][p_j]`` over integer offsets ``|p_j| <= P``.

    The profile is the same on every axis, so it is stored once per rank term;
    :attr:`factors` exposes the ``(R, n, 2P+1)`` view.
    """

    n: int
    weights: np.ndarray  # (R,)
    profiles: np.ndarray  # (R, 2P+1), index P is offset 0
    h: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.profiles = np.asarray(self.profiles, dtype=float)
        if self.profiles.ndim != 2 or self.profiles.shape[0] != self.weights.shape[0]:
            raise ValueError("profiles must have shape (R, 2P+1) matching weights (R,)")
        if self.profiles.shape[1] % 2 != 1:
            raise ValueError("profile length must be odd")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.profiles))):
            raise ValueError("kernel entries must be finite")

    @property
    def rank(self) -> int:
        return self.weights.shape[0]

    @property
    def P(self) -> int:
        return (self.profiles.shape[1] - 1) // 2

    @property
    def offsets(self) -> np.ndarray:
        return np.arange(-self.P, self.P + 1)

    @property
    def factors(self) -> np.ndarray:
        return np.broadcast_to(self.profiles[:, None, :], (self.rank, self.n, self.profiles.shape[1]))

    def coefficient(self, p) -> float:
        """The full kernel at one offset multi-index ``p`` (zero beyond ``P``)."""
        p = np.asarray(p, dtype=int)
        if np.any(np.abs(p) > self.P):
            return 0.0
        prod = np.prod(self.profiles[:, p + self.P], axis=1)
        return float(self.weights @ prod)


@dataclass
class CubatureResult:
    """Potential values on the density's grid, with the kernel bookkeeping that produced them."""

    grid: GridDensity
    rank: int | None = None
    offset_cap: int | None = None
    report: ErrorReport | None = None

    @property
    def values(self) -> np.ndarray:
        return self.grid.values

    def to_bytes(self) -> bytes:
        return self.grid.to_bytes()

    def save(self, path) -> None:
        self.grid.save(path)


def _family_for(spec: PotentialSpec, params: ShapeParams, h: float) -> Family:
    """Integral family in the scaled variable ``x / (sqrt(D) h)``; Yukawa ``a`` scales accordingly."""
    if spec.operator == "harmonic":
        return Family("I1" if spec.M == 1 else "IM", spec.M)
    a_eff = spec.a * math.sqrt(params.D) * h
    return Family("K1" if spec.M == 1 else "KM", spec.M, a_eff)


def _profile(p: np.ndarray, inv: np.ndarray, D: float, M: int) -> np.ndarray:
    """``exp(-p^2 inv / D) sum_{s<M} inv^s L_s^(-1/2)(p^2 inv / D)``, shape (R, len(p))."""
    y = (p * p)[None, :] / D * inv[:, None]
    prof = np.exp(-y)
    if M > 1:
        L = laguerre_table(M - 1, -0.5, y)
        s = L[M - 1]
        for k in range(M - 2, -1, -1):
            s = L[k] + inv[:, None] * s
        prof = prof * s
    return prof


def build_separable_kernel(
    spec: PotentialSpec,
    params: ShapeParams,
    rule: QuadratureRule,
    subst: SubstChain,
    h: float,
    offset_cap: int | None = None,
) -> SeparableKernel:
    """Rank-R kernel with one term per quadrature node of ``rule``.

    Term ``k`` has weight ``D h^2 / (4 (pi D)^(n/2)) * h_u * dt/du * (1+t_k)^(-n/2)``
    (times ``exp(-a^2 D h^2 t_k / 4)`` for Yukawa) and the per-axis profile
    ``exp(-p^2/(D(1+t_k))) sum_{s<M} (1+t_k)^-s L_s^(-1/2)(p^2/(D(1+t_k)))``.

    ``P`` is the smallest offset where ``exp(-P^2/(D(1+t_max)))`` drops below
    1e-16, capped at ``offset_cap`` (normally the grid diameter). Nodes whose
    weight underflows are dropped.

    Raises
    ------
    ValueError
        Without ``offset_cap``, if no finite ``P`` bounds the profiles (always
        the case for harmonic kernels, whose widest Gaussian is unbounded).
    """
    if spec.n < 1:
        raise ValueError("dimension must be positive")
    n, D, M = spec.n, params.D, spec.M
    u = rule.nodes
    logt = subst.log_t(u)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        logs = softplus(logt)
        logw = (
            math.log(D * h * h / (4.0 * (math.pi * D) ** (n / 2)))
            + math.log(rule.h)
            + subst.log_jacobian(u)
            - 0.5 * n * logs
        )
        if spec.operator == "yukawa":
            logw = logw - 0.25 * spec.a**2 * D * h * h * np.exp(logt)
    keep = np.isfinite(logw) & (logw > -700.0)
    logw, logs = logw[keep], logs[keep]
    inv = np.exp(-logs)
    if inv.size == 0:
        raise ValueError("every rank term underflows for this rule")

    # offset where the widest Gaussian falls below the tail bound
    wide = float(np.max(logs))
    need = math.sqrt(D * math.log(1.0 / _TAIL)) * math.exp(0.5 * wide)
    need = int(math.ceil(need)) + 2 * M
    if offset_cap is None:
        if not math.isfinite(need) or need > 10**6:
            raise ValueError("harmonic kernels need an offset cap (grid diameter)")
        P = need
    else:
        P = min(need, int(offset_cap))
    p = np.arange(-P, P + 1, dtype=float)
    prof = _profile(p, inv, D, M)
    if offset_cap is None:
        tail = np.max(np.abs(prof[:, [0, -1]]), axis=1)
        if np.any(tail > _TAIL * np.max(np.abs(prof), axis=1)):
            raise ValueError(f"offset cap P={P} leaves profile tails above {_TAIL:g}")
    return SeparableKernel(
        n=n,
        weights=np.exp(logw),
        profiles=prof,
        h=h,
        meta={"spec": spec, "params": params, "subst": subst.label(), "rule": rule},
    )


def _toeplitz(profile: np.ndarray, N: int) -> np.ndarray:
    """``T[i, i'] = profile[i - i']`` on an ``N``-point axis (zero beyond ``P``)."""
    P = (profile.shape[0] - 1) // 2
    d = np.arange(N)[:, None] - np.arange(N)[None, :]
    T = np.zeros((N, N))
    inside = np.abs(d) <= P
    T[inside] = profile[d[inside] + P]
    return T


def _conv_axis(arr: np.ndarray, profile: np.ndarray, axis: int) -> np.ndarray:
    """Zero-extended 1-D convolution along ``axis``, output on the same index range."""
    N = arr.shape[axis]
    if N < FFT_THRESHOLD:
        T = _toeplitz(profile, N)
        return np.moveaxis(np.tensordot(T, arr, axes=(1, axis)), 0, axis)
    P = (profile.shape[0] - 1) // 2
    shape = [1] * arr.ndim
    shape[axis] = profile.shape[0]
    full = signal.fftconvolve(arr, profile.reshape(shape), mode="full", axes=axis)
    sl = [slice(None)] * arr.ndim
    sl[axis] = slice(P, P + N)
    return full[tuple(sl)]


def apply_separable(
    kernel: SeparableKernel, density: GridDensity, axis_order: Sequence[int] | None = None
) -> CubatureResult:
    """Apply the kernel by ``n`` axis-wise 1-D convolutions per rank term.

    Terms are accumulated in ascending rank order. ``axis_order`` only
    changes the order of the passes inside a term.
    """
    if density.n != kernel.n:
        raise ValueError(f"kernel has n={kernel.n} but density has n={density.n}")
    if not math.isclose(density.h, kernel.h, rel_tol=1e-12):
        raise ValueError("kernel and density use different grid steps")
    order = list(range(kernel.n)) if axis_order is None else list(axis_order)
    if sorted(order) != list(range(kernel.n)):
        raise ValueError("axis_order must be a permutation of the axes")
    acc = np.zeros(density.shape)
    for r in range(kernel.rank):
        term = density.values
        for ax in order:
            term = _conv_axis(term, kernel.profiles[r], ax)
        acc += kernel.weights[r] * term
    report = kernel.meta.get("report")
    return CubatureResult(density.like(acc), rank=kernel.rank, offset_cap=kernel.P, report=report)


def direct_coefficients(
    spec: PotentialSpec, params: ShapeParams, h: float, extent: Sequence[int], form: str = "radial"
) -> np.ndarray:
    """Coefficient tensor ``a_p`` for offsets ``|p_j| < extent_j`` (full, both signs).

    ``radial``: ``h^2 D^(1-n/2) L eta_2M(p / sqrt(D))`` from the closed form
    (harmonic only). ``tensor``: ``D h^2 / (4 (pi D)^(n/2)) I_M(p / sqrt(D))``
    from a fixed Gauss-Legendre reference (harmonic or Yukawa).
    """
    n, D = spec.n, params.D
    grids = [np.arange(e) for e in extent]
    mesh = np.stack(np.meshgrid(*grids, indexing="ij"), axis=-1).reshape(-1, n).astype(float)
    if form == "radial":
        if spec.operator != "harmonic":
            raise ValueError("radial direct coefficients are available for the harmonic potential only")
        quad = h * h * D ** (1 - n / 2) * harmonic_action_r2(np.sum(mesh * mesh, axis=1), spec.M, n, D)
    elif form == "tensor":
        fam = _family_for(spec, params, h)
        quad = D * h * h / (4.0 * (math.pi * D) ** (n / 2)) * reference_batch(fam, n, mesh / math.sqrt(D))
    else:
        raise ValueError(f"unknown coefficient form {form!r}")
    quad = quad.reshape(tuple(extent))
    # mirror the non-negative orthant to all sign combinations
    for ax in range(n):
        rev = np.flip(np.take(quad, np.arange(1, quad.shape[ax]), axis=ax), axis=ax)
        quad = np.concatenate([rev, quad], axis=ax)
    return quad


def apply_direct(
    spec: PotentialSpec, params: ShapeParams, density: GridDensity, form: str = "radial"
) -> CubatureResult:
    """Dense n-dimensional convolution with the exact cubature coefficients (test oracle)."""
    if density.n != spec.n:
        raise ValueError(f"spec has n={spec.n} but density has n={density.n}")
    size = int(np.prod(density.shape))
    if size > DIRECT_POINT_LIMIT:
        raise ValueError(f"apply_direct refuses grids with more than {DIRECT_POINT_LIMIT} points (got {size})")
    coef = direct_coefficients(spec, params, density.h, density.shape, form=form)
    full = signal.convolve(density.values, coef, mode="full", method="auto")
    sl = tuple(slice(N - 1, 2 * N - 1) for N in density.shape)
    return CubatureResult(density.like(full[sl]))


def evaluate_at(kernel: SeparableKernel, density: GridDensity, probes) -> np.ndarray:
    """Cubature values at selected grid points ``probes`` (rows of global indices)."""
    probes = np.atleast_2d(np.asarray(probes, dtype=int))
    out = np.empty(probes.shape[0])
    P = kernel.P
    for i, q in enumerate(probes):
        acc = density.values[None, ...]
        acc = np.broadcast_to(acc, (kernel.rank,) + density.shape)
        for j in range(kernel.n):
            d = q[j] - density.axis_indices(j)
            A = np.zeros((kernel.rank, d.shape[0]))
            ok = np.abs(d) <= P
            A[:, ok] = kernel.profiles[:, d[ok] + P]
            acc = np.einsum("ra,ra...->r...", A, acc)
        out[i] = float(kernel.weights @ acc)
    return out


def evaluate_product_density(
    kernel: SeparableKernel, axis_values: Sequence[np.ndarray], m_min: Sequence[int], probes
) -> np.ndarray:
    """Cubature values at ``probes`` for a product density ``u(hm) = prod_j g_j(m_j)``.

    ``axis_values[j]`` holds ``g_j`` on indices ``m_min[j], m_min[j]+1, ...``.
    Costs ``O(R n N)`` per probe, so fine grids stay cheap.
    """
    probes = np.atleast_2d(np.asarray(probes, dtype=int))
    P = kernel.P
    out = np.empty(probes.shape[0])
    for i, q in enumerate(probes):
        prod = np.ones(kernel.rank)
        for j, g in enumerate(axis_values):
            d = q[j] - (m_min[j] + np.arange(len(g)))
            ok = np.abs(d) <= P
            prod *= kernel.profiles[:, d[ok] + P] @ np.asarray(g)[ok]
        out[i] = float(kernel.weights @ prod)
    return out


@dataclass
class ConvergenceTable:
    h: np.ndarray
    error: np.ndarray

    @property
    def orders(self) -> np.ndarray:
        """Observed orders ``log(e_i / e_{i+1}) / log(h_i / h_{i+1})``."""
        return np.log(self.error[:-1] / self.error[1:]) / np.log(self.h[:-1] / self.h[1:])

    def rows(self):
        return list(zip(self.h.tolist(), self.error.tolist()))


def convergence_study(
    spec: PotentialSpec,
    params: ShapeParams,
    exact_potential: Callable[[np.ndarray], np.ndarray],
    density_1d: Callable[[np.ndarray], np.ndarray],
    h_list: Sequence[float],
    probes: np.ndarray,
    rule_factory: Callable[[Family], tuple[QuadratureRule, SubstChain]],
    box: float = 6.5,
) -> ConvergenceTable:
    """Sup-norm cubature error at ``probes`` for a product density ``prod_j g(y_j)``.

    ``probes`` are points of ``R^n`` that must lie on every grid ``h Z^n``.
    ``rule_factory`` maps the integral family to a validated (rule, subst).
    The density is sampled on ``[-box, box]^n``.
    """
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    exact = np.asarray(exact_potential(probes), dtype=float)
    errors = []
    for h in h_list:
        idx = np.rint(probes / h).astype(int)
        if not np.allclose(idx * h, probes, atol=1e-12):
            raise ValueError(f"probe points are not on the grid with h={h}")
        half = int(math.ceil(box / h))
        g = density_1d(h * np.arange(-half, half + 1))
        rule, subst = rule_factory(_family_for(spec, params, h))
        ker = build_separable_kernel(spec, params, rule, subst, h, offset_cap=2 * half)
        vals = evaluate_product_density(ker, [g] * spec.n, [-half] * spec.n, idx)
        errors.append(float(np.max(np.abs(vals - exact))))
    return ConvergenceTable(np.asarray(h_list, dtype=float), np.asarray(errors))
