"""Heat potentials of space-time quasi-interpolants.

Solves ``f_t - nu Laplace f = u`` in ``R^n x (0, T]`` with ``f(., 0) = 0`` by
applying the exact heat potential to the quasi-interpolant of ``u`` on the
lattice ``(h m, tau j)``. After the spatial integration the remaining
one-dimensional integral over ``lambda in (0, t)`` is computed by a doubly
exponential trapezoidal rule in ``u`` with

    lambda = t / (1 + exp(-xi)),  xi = a (s + e^s),  s = b (u - e^-u).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .dequad.rules import QuadratureRule
from .genfun import ShapeParams
from .specfun import laguerre_table
from .subst import softplus

__all__ = [
    "SpaceTimeGrid",
    "HeatOrder",
    "LambdaRule",
    "K_jm",
    "K_jm_direct",
    "time_lattice",
    "space_lattice",
    "solve_order2",
    "solve_orderSM",
    "inner_integral",
    "inner_integral_t_derivative",
    "heat_error_table",
    "diagonal_ratios",
    "x2t2_source",
    "x2t2_exact",
    "ExperimentalOrderWarning",
    "TIME_TRUNC",
    "SPACE_TRUNC",
]

TIME_TRUNC = 1e-16
SPACE_TRUNC = 1e-18


class ExperimentalOrderWarning(UserWarning):
    """Heat orders outside the tested range (M <= 4, S <= 2)."""


@dataclass(frozen=True)
class SpaceTimeGrid:
    """Lattice ``(h m, tau j)`` in ``R^n x R`` with diffusivity ``nu`` and horizon ``T``."""

    n: int
    h: float
    tau: float
    nu: float = 1.0
    T: float = 1.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension must be positive")
        if not (self.h > 0 and self.tau > 0):
            raise ValueError("steps h and tau must be positive")
        if self.nu < 0:
            raise ValueError("diffusivity must be non-negative")
        if not self.T > 0:
            raise ValueError("horizon T must be positive")

    @property
    def J(self) -> int:
        return int(round(self.T / self.tau))


@dataclass(frozen=True)
class HeatOrder:
    """Spatial order ``M`` and temporal order ``S``; beyond ``M = 4`` or ``S = 2`` is experimental."""

    M: int = 1
    S: int = 1

    def __post_init__(self):
        if not (1 <= self.M <= 8 and 1 <= self.S <= 8):
            raise ValueError("M and S must lie in [1, 8]")
        if self.M > 4 or self.S > 2:
            warnings.warn(f"heat order (M={self.M}, S={self.S}) is experimental", ExperimentalOrderWarning, 2)


@dataclass(frozen=True)
class LambdaRule:
    """Trapezoid rule in ``u`` for ``lambda = t / (1 + e^-xi)``, ``xi = a (s + e^s)``, ``s = b (u - e^-u)``."""

    rule: QuadratureRule = QuadratureRule(0.05, 160, 160)
    a: float = 1.0
    b: float = 1.0

    @classmethod
    def uniform(cls, h_u: float = 0.05, u_max: float = 8.0, a: float = 1.0, b: float = 1.0) -> "LambdaRule":
        N = int(math.ceil(u_max / h_u))
        return cls(QuadratureRule(h_u, N, N), a, b)

    def nodes(self, t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(lambda, t - lambda, weight)`` for the nodes carrying non-zero weight."""
        u = self.rule.nodes
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            s = self.b * (u - np.exp(-u))
            xi = self.a * (s + np.exp(s))
            log_dxi = math.log(self.a * self.b) + softplus(s) + softplus(-u)
            log_lam = math.log(t) - softplus(-xi)
            log_rest = math.log(t) - softplus(xi)
            log_w = log_lam - softplus(xi) + log_dxi + math.log(self.rule.h)
            w = np.exp(log_w)
        keep = np.isfinite(log_w) & (w > 0)
        return np.exp(log_lam[keep]), np.exp(log_rest[keep]), w[keep]

    @classmethod
    def calibrate(
        cls, t: float, grid: SpaceTimeGrid, params: ShapeParams, tol: float = 1e-12, a: float = 1.0, b: float = 1.0
    ) -> "LambdaRule":
        """Coarsest step (halving from 0.4) whose ``K_{j,m}`` agree with the next halving to ``tol``.

        Checked at a few representative ``(j, m)`` around the probe ``x = 0``.
        """
        x = np.zeros(grid.n)
        tj = [0, int(round(t / grid.tau)), int(round(t / grid.tau)) // 2]
        ms = [np.zeros(grid.n, dtype=int), np.ones(grid.n, dtype=int)]
        h_u = 0.4
        prev = None
        while h_u > 1e-3:
            cur = cls.uniform(h_u, 8.0, a, b)
            vals = np.array([K_jm(x, t, j, m, grid, params, cur) for j in tj for m in ms])
            if prev is not None:
                scale = np.max(np.abs(vals))
                if np.max(np.abs(vals - prev[1])) <= tol * scale:
                    return prev[0]
            prev = (cur, vals)
            h_u /= 2
        return prev[0]


def _time_factor(rest: np.ndarray, tj: np.ndarray, D0tau2: float, S: int) -> np.ndarray:
    """``eta_tilde_2S`` in ``(t - lambda - tau j) / sqrt(D0 tau^2)``, shape (J, L)."""
    y = (rest[None, :] - tj[:, None]) ** 2 / D0tau2
    T = np.exp(-y)
    if S > 1:
        L = laguerre_table(S - 1, -0.5, y)
        T = T * np.sum(L, axis=0)
    return T


def _space_factor(d: np.ndarray, sv: np.ndarray, Dh2: float, M: int) -> np.ndarray:
    """``g_M(lambda, d)`` for offsets ``d`` (K,) and ``s = D h^2 + 4 nu lambda`` (L,), shape (K, L)."""
    y = (d * d)[:, None] / sv[None, :]
    G = np.exp(-y) / np.sqrt(sv)[None, :]
    if M > 1:
        L = laguerre_table(M - 1, -0.5, y)
        r = (Dh2 / sv)[None, :]
        acc = L[M - 1]
        for k in range(M - 2, -1, -1):
            acc = L[k] + r * acc
        G = G * acc
    return G


def time_lattice(t: float, tau: float, D0: float, eps: float = TIME_TRUNC) -> np.ndarray:
    """Indices ``j`` whose time Gaussian reaches into ``[0, t]`` above ``eps``."""
    R = tau * math.sqrt(D0 * math.log(1.0 / eps))
    lo = math.floor(-R / tau) - 1
    hi = math.ceil((t + R) / tau) + 1
    return np.arange(lo, hi + 1)


def space_lattice(x: float, t: float, h: float, D: float, nu: float, radius_eps: float = 1e-40) -> np.ndarray:
    """Candidate indices ``m`` on one axis whose Gaussian weight at ``x`` exceeds ``radius_eps``."""
    width = math.sqrt(D * h * h + 4.0 * nu * t)
    R = width * math.sqrt(math.log(1.0 / radius_eps))
    return np.arange(math.floor((x - R) / h), math.ceil((x + R) / h) + 1)


def K_jm(x, t: float, j: int, m, grid: SpaceTimeGrid, params: ShapeParams, rule: LambdaRule | None = None) -> float:
    """``int_0^t exp(-(lambda-(t-tau j))^2/(D0 tau^2)) exp(-|x-hm|^2/s) s^(-n/2) dlambda``, ``s = D h^2 + 4 nu lambda``.

    The spatial exponential is formed axis by axis at each node.
    """
    if t <= 0:
        return 0.0
    rule = rule or LambdaRule()
    x = np.atleast_1d(np.asarray(x, dtype=float))
    m = np.atleast_1d(np.asarray(m))
    lam, rest, w = rule.nodes(t)
    s = params.D * grid.h**2 + 4.0 * grid.nu * lam
    T = np.exp(-((rest - grid.tau * j) ** 2) / (params.D0 * grid.tau**2))
    X = np.ones_like(lam)
    for i in range(grid.n):
        X = X * np.exp(-((x[i] - grid.h * m[i]) ** 2) / s) / np.sqrt(s)
    return float(np.sum(w * T * X))


def K_jm_direct(x, t: float, j: int, m, grid: SpaceTimeGrid, params: ShapeParams, rule: LambdaRule | None = None):
    """Same integral with ``|x - hm|^2`` formed first (used to check the axis-wise form)."""
    if t <= 0:
        return 0.0
    rule = rule or LambdaRule()
    x = np.atleast_1d(np.asarray(x, dtype=float))
    m = np.atleast_1d(np.asarray(m))
    lam, rest, w = rule.nodes(t)
    s = params.D * grid.h**2 + 4.0 * grid.nu * lam
    r2 = float(np.sum((x - grid.h * m) ** 2))
    T = np.exp(-((rest - grid.tau * j) ** 2) / (params.D0 * grid.tau**2))
    return float(np.sum(w * T * np.exp(-r2 / s) * s ** (-grid.n / 2)))


def _probe_value(u, x, t, grid, params, order, rule):
    n = grid.n
    lam, rest, w = rule.nodes(t)
    Dh2 = params.D * grid.h**2
    s = Dh2 + 4.0 * grid.nu * lam
    j = time_lattice(t, grid.tau, params.D0)
    T = _time_factor(rest, grid.tau * j, params.D0 * grid.tau**2, order.S) * w[None, :]
    axes = [space_lattice(x[i], t, grid.h, params.D, grid.nu) for i in range(n)]
    G = [_space_factor(x[i] - grid.h * axes[i], s, Dh2, order.M) for i in range(n)]

    mesh = np.meshgrid(*[grid.h * a for a in axes], indexing="ij")
    Y = np.stack(mesh, axis=-1)
    U = np.stack([np.asarray(u(Y, grid.tau * jj), dtype=float) * np.ones(Y.shape[:-1]) for jj in j])

    # drop lattice points whose Gaussian-weighted source is negligible
    env = np.exp(-np.sum((Y - x) ** 2, axis=-1) / float(s.max()))
    mag = env * np.max(np.abs(U), axis=0)
    if np.any(mag > 0):
        keep = mag > SPACE_TRUNC * mag.max()
        for ax in range(n):
            other = tuple(a for a in range(n) if a != ax)
            hit = np.nonzero(keep.any(axis=other) if other else keep)[0]
            sl = slice(hit[0], hit[-1] + 1)
            axes[ax] = axes[ax][sl]
            G[ax] = G[ax][sl]
            U = np.take(U, np.arange(sl.start, sl.stop), axis=ax + 1)
            keep = np.take(keep, np.arange(sl.start, sl.stop), axis=ax)

    # contract the lattice axis by axis: (J, m1..mn) -> (J, L)
    acc = np.einsum("jm...,ml->jl...", U, G[0]) if n > 1 else U @ G[0]
    for ax in range(1, n):
        acc = np.einsum("jlm...,ml->jl...", acc, G[ax])
    total = float(np.sum(T * acc))
    return grid.h**n / (math.pi ** ((n + 1) / 2) * math.sqrt(params.D0)) * total


def _validate_probes(probes, n):
    pts = []
    for x, t in probes:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (n,):
            raise ValueError(f"probe point has dimension {x.shape[0]}, grid has n={n}")
        if t < 0:
            raise ValueError("probe time must be non-negative")
        pts.append((x, float(t)))
    return pts


def solve_orderSM(
    u: Callable[[np.ndarray, float], np.ndarray],
    grid: SpaceTimeGrid,
    params: ShapeParams,
    order: HeatOrder,
    probes: Sequence[tuple],
    rule: LambdaRule | None = None,
) -> np.ndarray:
    """Heat potential of the order-(2M, 2S) quasi-interpolant of ``u`` at probes ``(x, t)``.

    ``u(Y, t)`` receives an array of lattice points ``Y`` (..., n) and a scalar
    time. The spatial factor is ``g_M`` and the time factor is
    ``eta_tilde_2S((t - lambda - tau j)/(sqrt(D0) tau))`` under the integral,
    i.e. the t-derivatives of the kernel act on the Gaussian only. Sums over
    ``j`` and ``m`` are truncated where the Gaussians fall below 1e-16 and
    the weighted source below 1e-18 of its maximum.
    """
    rule = rule or LambdaRule()
    out = []
    for x, t in _validate_probes(probes, grid.n):
        out.append(0.0 if t == 0 else _probe_value(u, x, t, grid, params, order, rule))
    return np.asarray(out)


def solve_order2(u, grid: SpaceTimeGrid, params: ShapeParams, probes, rule: LambdaRule | None = None) -> np.ndarray:
    """Second-order scheme: ``h^n/(pi^((n+1)/2) sqrt(D0)) sum_{j,m} u(hm, tau j) K_{j,m}(x, t)``."""
    return solve_orderSM(u, grid, params, HeatOrder(1, 1), probes, rule)


# ---------------------------------------------------------------------------
# the inner integral and its total t-derivative


def inner_integral(x, t: float, j: int, m, grid: SpaceTimeGrid, params: ShapeParams, M: int = 1,
                   rule: LambdaRule | None = None) -> float:
    """``int_0^t exp(-(lambda-(t-tau j))^2/(D0 tau^2)) prod_i g_M(lambda, x_i - h m_i) dlambda``."""
    if t <= 0:
        return 0.0
    rule = rule or LambdaRule()
    x = np.atleast_1d(np.asarray(x, dtype=float))
    m = np.atleast_1d(np.asarray(m))
    lam, rest, w = rule.nodes(t)
    Dh2 = params.D * grid.h**2
    s = Dh2 + 4.0 * grid.nu * lam
    T = np.exp(-((rest - grid.tau * j) ** 2) / (params.D0 * grid.tau**2))
    G = np.ones_like(lam)
    for i in range(grid.n):
        G = G * _space_factor(np.array([x[i] - grid.h * m[i]]), s, Dh2, M)[0]
    return float(np.sum(w * T * G))


def inner_integral_t_derivative(x, t: float, j: int, m, grid: SpaceTimeGrid, params: ShapeParams, M: int = 1,
                                rule: LambdaRule | None = None) -> float:
    """Total second t-derivative of :func:`inner_integral`, including the moving upper limit.

    With ``c = t - tau j`` and ``G(lambda) = prod_i g_M``,
    ``d^2/dt^2 int_0^t E(lambda - c) G dlambda``
    ``= int_0^t E''(lambda - c) G dlambda + d/dt [E(t - c) G(t)] - E'(t - c) G(t)``
    where ``E(z) = exp(-z^2/(D0 tau^2))``; ``G`` does not depend on ``t``.
    """
    rule = rule or LambdaRule()
    x = np.atleast_1d(np.asarray(x, dtype=float))
    m = np.atleast_1d(np.asarray(m))
    c2 = params.D0 * grid.tau**2
    Dh2 = params.D * grid.h**2
    d = x - grid.h * m

    def G(lam):
        s = Dh2 + 4.0 * grid.nu * np.atleast_1d(lam)
        out = np.ones_like(s)
        for i in range(grid.n):
            out = out * _space_factor(d[i : i + 1], s, Dh2, M)[0]
        return out

    lam, rest, w = rule.nodes(t)
    z = grid.tau * j - rest  # lambda - c
    E2 = (4.0 * z * z / (c2 * c2) - 2.0 / c2) * np.exp(-z * z / c2)
    interior = float(np.sum(w * E2 * G(lam)))

    # at the upper limit lambda - c = tau j for every t
    zb = grid.tau * j
    Eb = math.exp(-zb * zb / c2)
    E1b = -2.0 * zb / c2 * Eb
    step = 1e-5 * max(t, grid.tau)
    dG = float((G(t + step)[0] - G(t - step)[0]) / (2 * step))
    return interior + Eb * dG - E1b * float(G(t)[0])


# ---------------------------------------------------------------------------
# the x^2 + t^2 test problem and the error matrix


def x2t2_source(Y: np.ndarray, t: float) -> np.ndarray:
    return np.sum(Y * Y, axis=-1) + t * t


def x2t2_exact(x, t: float) -> float:
    """Solution of ``f_t - f_xx = x^2 + t^2`` (n = 1, nu = 1), ``f = t^2 + t^3/3 + t x^2``."""
    x = float(np.atleast_1d(x)[0])
    return t * t + t**3 / 3 + t * x * x


def heat_error_table(
    u,
    exact_f: Callable | None,
    inv_steps: Sequence[int],
    x: float,
    t: float,
    params: ShapeParams = ShapeParams(2.0, 2.0),
    nu: float = 1.0,
    order: HeatOrder = HeatOrder(1, 1),
    rule: LambdaRule | None = None,
) -> np.ndarray:
    """Matrix of ``f_{h,tau}(x, t) - f(x, t)``; rows ``1/tau``, columns ``1/h``.

    Without ``exact_f`` the matrix holds ``f_{h,tau}`` itself.
    """
    if not t > 0:
        raise ValueError("probe time must be positive")
    rule = rule or LambdaRule()
    ref = exact_f(x, t) if exact_f is not None else 0.0
    out = np.empty((len(inv_steps), len(inv_steps)))
    for a, ti in enumerate(inv_steps):
        for b, hi in enumerate(inv_steps):
            grid = SpaceTimeGrid(1, 1.0 / hi, 1.0 / ti, nu, T=max(t, 1.0 / ti))
            val = solve_orderSM(u, grid, params, order, [(np.array([x]), t)], rule)[0]
            out[a, b] = val - ref
    return out


def diagonal_ratios(table: np.ndarray) -> np.ndarray:
    """``error(h, tau) / error(h/2, tau/2)`` along the diagonal."""
    d = np.abs(np.diag(table))
    return d[:-1] / d[1:]
