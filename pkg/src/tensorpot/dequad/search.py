"""Reference integrals and the search for the coarsest admissible trapezoid step."""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import asdict, dataclass, fields
from functools import lru_cache

import numpy as np

from ..kernels import (
    Family,
    I1_closed_form,
    integrand_table,
    w_integrand,
    w_log_envelope,
    yukawa_gaussian_closed_form_3d,
    yukawa_log_closed_form_3d,
)
from .rules import U_LIMIT, QuadratureRule, SubstChain

__all__ = [
    "ErrorReport",
    "NodeSearchFailure",
    "ReferenceNonConvergence",
    "sample_norms",
    "sample_points",
    "reference_value",
    "reference_values",
    "reference_log_values",
    "reference_batch",
    "node_search",
    "rule_for",
    "reports_to_csv",
    "CSV_FIELDS",
]

CSV_FIELDS = ["family", "n", "subst", "a", "b", "target_eps", "h0", "node_count", "achieved_eps", "seconds"]
MAX_NODES = 10_000


class NodeSearchFailure(RuntimeError):
    pass


class ReferenceNonConvergence(RuntimeError):
    pass


@dataclass
class ErrorReport:
    """Outcome of a node search: coarsest step ``h0`` and the minimal window at that step."""

    family: str
    n: int
    subst: str
    a: float
    b: float
    target_eps: float
    h0: float
    node_count: int
    achieved_eps: float
    seconds: float
    n0: int = 0
    n1: int = 0
    sample_spec: str = ""

    @property
    def rule(self) -> QuadratureRule:
        return QuadratureRule(self.h0, self.n0, self.n1)

    def row(self) -> dict:
        d = asdict(self)
        return {k: d[k] for k in CSV_FIELDS}


def reports_to_csv(reports, extra: dict | None = None) -> str:
    buf = io.StringIO()
    names = CSV_FIELDS + (list(extra) if extra else [])
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for i, r in enumerate(reports):
        row = r.row()
        vals = [_fmt(row[k]) for k in CSV_FIELDS]
        if extra:
            vals += [_fmt(extra[k][i]) for k in extra]
        w.writerow(vals)
    return buf.getvalue()


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


# ---------------------------------------------------------------------------
# |x| samples


def sample_norms(x_range_max: float = 1e3) -> np.ndarray:
    """``{0}``, 60 log-spaced norms in ``[1e-2, x_range_max]``, and ``x_range_max`` itself."""
    return np.concatenate([[0.0], np.logspace(-2, math.log10(x_range_max), 60), [x_range_max]])


def sample_points(n: int, x_range_max: float = 1e3) -> np.ndarray:
    """Sample norms placed on the diagonal ``(x, ..., x)``."""
    r = sample_norms(x_range_max)
    return np.repeat(r[:, None] / math.sqrt(n), n, axis=1)


# ---------------------------------------------------------------------------
# reference oracle

_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)


def _gl(f, lo: float, hi: float) -> np.ndarray:
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    return half * (f(mid + half * _GL_X) @ _GL_W)


def _adaptive(f, lo, hi, whole, tol, depth, budget) -> float:
    mid = 0.5 * (lo + hi)
    left, right = _gl(f, lo, mid), _gl(f, mid, hi)
    if abs(left + right - whole) <= tol or depth == 0:
        if depth == 0 and abs(left + right - whole) > tol:
            budget[0] += 1
        return left + right
    return _adaptive(f, lo, mid, left, tol, depth - 1, budget) + _adaptive(
        f, mid, hi, right, tol, depth - 1, budget
    )


def _dyadic_panels(levels: int = 80) -> list[tuple[float, float]]:
    edges = [2.0**-k for k in range(levels + 1)]
    return [(0.0, edges[-1])] + [(edges[k + 1], edges[k]) for k in range(levels - 1, -1, -1)]


_PANELS = _dyadic_panels()


def reference_value(family: Family, n: int, x, rtol: float = 1e-14, log_shift: float = 0.0) -> float:
    """Adaptive Gauss-Legendre value of the untransformed integral at one point ``x``.

    The integral is written over ``w in (0, 1]`` (``1 + t = w^-2``), split
    into dyadic panels toward ``w = 0`` and refined by bisection until the
    Gauss-Legendre estimate of every panel is stable to ``rtol`` of the total.
    The result is scaled by ``exp(-log_shift)``.

    Raises
    ------
    ReferenceNonConvergence
        If some panel fails to settle within 40 bisections.
    """
    X = np.atleast_2d(np.asarray(x, dtype=float))
    if X.shape[1] != n:
        X = np.full((1, n), float(np.asarray(x)) / math.sqrt(n))

    def f(w):
        return w_integrand(family, n, w, X, log_shift=[log_shift])[0]

    coarse = [_gl(f, lo, hi) for lo, hi in _PANELS]
    scale = sum(abs(c) for c in coarse)
    if scale == 0.0:
        return 0.0
    tol = rtol * scale / len(_PANELS)
    budget = [0]
    total = 0.0
    for (lo, hi), c in zip(_PANELS, coarse):
        total += _adaptive(f, lo, hi, c, tol, 40, budget)
    if budget[0]:
        raise ReferenceNonConvergence(f"{budget[0]} panels did not converge for {family.label()}")
    return total


def reference_values(family: Family, n: int, X) -> np.ndarray:
    """Reference values at each row of ``X``; uses the closed forms where one exists."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    r = np.sqrt(np.sum(X * X, axis=1))
    if family.name == "I1":
        return I1_closed_form(r, n)
    if family.name == "K1" and n == 3:
        return 4.0 * yukawa_gaussian_closed_form_3d(r[:, None], family.a)
    return np.array([reference_value(family, n, x) for x in X])


_ENV_W = np.concatenate([[1.0], np.logspace(-6, 0, 2401)[:-1]])


def _envelope_peak(family: Family, n: int, r2) -> np.ndarray:
    """Maximum over ``w`` of the log envelope, one value per squared norm."""
    return np.max(w_log_envelope(family, n, _ENV_W, r2), axis=1)


def reference_log_values(family: Family, n: int, X) -> np.ndarray:
    """``log`` of the reference integral at each row of ``X``.

    Works where the value itself underflows (Yukawa families at large
    ``|x|``): closed forms are taken in log form and the adaptive rule runs
    on the integrand divided by its envelope peak.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    r2 = np.sum(X * X, axis=1)
    r = np.sqrt(r2)
    if family.name == "I1":
        return np.log(I1_closed_form(r, n))
    if family.name == "K1" and n == 3:
        return math.log(4.0) + yukawa_log_closed_form_3d(r, family.a)
    shift = _envelope_peak(family, n, r2)
    vals = np.array([reference_value(family, n, x, log_shift=s) for x, s in zip(X, shift)])
    if not np.all(vals > 0):
        raise ReferenceNonConvergence(f"non-positive reference value for {family.label()}")
    return np.log(vals) + shift


_BATCH_X, _BATCH_W = np.polynomial.legendre.leggauss(32)


def reference_batch(family: Family, n: int, X, levels: int = 60) -> np.ndarray:
    """Fixed composite Gauss-Legendre over dyadic ``w`` panels, vectorized over many points.

    Each dyadic panel is split in two and integrated with 32 nodes. Meant for
    coefficient tables with moderate ``|x|`` (up to a few hundred); checked
    against :func:`reference_value` in the test suite.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    nodes, weights = [], []
    for lo, hi in _dyadic_panels(levels):
        for a, b in ((lo, 0.5 * (lo + hi)), (0.5 * (lo + hi), hi)):
            nodes.append(0.5 * (a + b) + 0.5 * (b - a) * _BATCH_X)
            weights.append(0.5 * (b - a) * _BATCH_W)
    w = np.concatenate(nodes)
    wt = np.concatenate(weights)
    out = np.empty(X.shape[0])
    for s in range(0, X.shape[0], 2048):
        out[s : s + 2048] = w_integrand(family, n, w, X[s : s + 2048]) @ wt
    return out


# ---------------------------------------------------------------------------
# node search


def _support(family, n, subst, X, log_ref, floor: float = 1e-40) -> tuple[float, float]:
    """Interval of ``u`` outside which every relative integrand value is below ``floor``."""
    u = np.arange(-U_LIMIT, U_LIMIT + 5e-3, 0.01)
    big = np.zeros(u.shape, dtype=bool)
    for s in range(0, X.shape[0], 16):
        T = integrand_table(family, n, subst, u, X[s : s + 16], log_shift=log_ref[s : s + 16])
        big |= (np.abs(T) > floor).any(axis=0)
    idx = np.nonzero(big)[0]
    if idx.size == 0:
        raise NodeSearchFailure(f"{family.label()} n={n}: integrand vanishes on |u| <= {U_LIMIT}")
    return float(u[idx[0]] - 0.02), float(u[idx[-1]] + 0.02)


def _node_table(family, n, subst, h, X, log_ref, support):
    """Node contributions divided by the reference value, so each row sums to about 1."""
    k = np.arange(math.floor(support[0] / h), math.ceil(support[1] / h) + 1)
    return k, h * integrand_table(family, n, subst, h * k, X, log_shift=log_ref)


def _full_error(T) -> float:
    return float(np.max(np.abs(T.sum(axis=1) - 1.0)))


def _min_window(T: np.ndarray, eps: float):
    """Shortest window [lo, hi] (column indices) whose relative partial sums meet ``eps`` for every row."""
    sig = np.nonzero((np.abs(T) > 1e-4 * eps).any(axis=0))[0]
    if sig.size == 0:
        return None
    a, b = int(sig[0]), int(sig[-1])
    Ts = T[:, a : b + 1]
    C = np.concatenate([np.zeros((T.shape[0], 1)), np.cumsum(Ts, axis=1)], axis=1)
    N = Ts.shape[1]
    best = None
    for lo in range(N):
        if best is not None and N - lo < best[1] - best[0] + 1:
            break
        S = C[:, lo + 1 :] - C[:, lo : lo + 1]
        err = np.max(np.abs(S - 1.0), axis=0)
        ok = np.nonzero(err <= eps)[0]
        if ok.size:
            hi = lo + int(ok[0])
            if best is None or hi - lo < best[1] - best[0]:
                best = (lo, hi, float(err[ok[0]]))
    if best is None:
        return None
    lo, hi, err = best
    return a + lo, a + hi, err


def node_search(
    family: Family,
    n: int,
    subst: SubstChain,
    target_eps: float,
    x_range_max: float = 1e3,
) -> ErrorReport:
    """Largest step ``h0`` meeting ``target_eps`` uniformly over the ``|x|`` samples.

    Steps ``h = 1, 0.9, 0.81, ...`` are tried until the untruncated trapezoid
    sum meets the target at every sample; the step is then refined by
    bisection to three significant digits and rounded down. At ``h0`` the node count is the
    length of the shortest contiguous window whose partial sum still meets
    the target everywhere.

    Raises
    ------
    NodeSearchFailure
        If the target needs more than 10^4 nodes.
    """
    if not 1e-15 <= target_eps <= 1e-1:
        raise ValueError("target_eps must lie in [1e-15, 1e-1]")
    t0 = time.perf_counter()
    X = sample_points(n, x_range_max)
    log_ref = reference_log_values(family, n, X)
    support = _support(family, n, subst, X, log_ref)
    width = support[1] - support[0]

    def passes(h):
        _, T = _node_table(family, n, subst, h, X, log_ref, support)
        return _full_error(T) <= target_eps

    h_fail, h_pass = None, 1.0
    while not passes(h_pass):
        h_fail = h_pass
        h_pass *= 0.9
        if width / h_pass > MAX_NODES:
            raise NodeSearchFailure(f"{family.label()} n={n}: no step down to {h_pass:.3g} meets {target_eps:g}")
    if h_fail is not None:
        while (h_fail - h_pass) > 5e-4 * h_pass:
            mid = 0.5 * (h_fail + h_pass)
            if passes(mid):
                h_pass = mid
            else:
                h_fail = mid

    # prefer h0 rounded down to three significant digits; the error is not
    # monotone in h right at the threshold, so keep the bisected step if needed
    digits = 2 - math.floor(math.log10(h_pass))
    win = None
    for h_try in (math.floor(h_pass * 10**digits) / 10**digits, h_pass):
        k, T = _node_table(family, n, subst, h_try, X, log_ref, support)
        win = _min_window(T, target_eps)
        if win is not None:
            h_pass = h_try
            break
    if win is None:
        raise NodeSearchFailure(f"{family.label()} n={n}: no window meets {target_eps:g}")
    lo, hi, err = win
    count = hi - lo + 1
    if count > MAX_NODES:
        raise NodeSearchFailure(f"{family.label()} n={n}: {count} nodes exceed the {MAX_NODES} limit")
    return ErrorReport(
        family=family.label(),
        n=n,
        subst=subst.kind,
        a=subst.a,
        b=subst.b,
        target_eps=target_eps,
        h0=float(h_pass),
        node_count=int(count),
        achieved_eps=err,
        seconds=time.perf_counter() - t0,
        n0=int(-k[lo]),
        n1=int(k[hi]),
        sample_spec=f"0 + logspace(-2, log10({x_range_max:g}), 60) + {x_range_max:g}, diagonal",
    )


@lru_cache(maxsize=64)
def rule_for(family: Family, n: int, subst: SubstChain, target_eps: float, x_range_max: float = 1e3):
    """Cached :func:`node_search`; returns the report (its ``rule`` attribute is the quadrature rule)."""
    return node_search(family, n, subst, target_eps, x_range_max)
