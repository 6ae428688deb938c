"""Command-line front end: quadrature tables, potentials, heat error tables and kernel sweeps.

Every subcommand reads an optional flat ``key=value`` config file plus
``key=value`` overrides on the command line, and writes CSV (with a leading
``#`` comment echoing the version and config) or JSON.

Exit codes: 0 success, 2 usage error, 3 numeric failure, 4 assertion failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from typing import Sequence

import numpy as np

from . import __version__
from .dequad import CSV_FIELDS, NodeSearchFailure, ReferenceNonConvergence, node_search, reference_value
from .dequad.presets import HEAT_INV_STEPS, HEAT_TABLE, PRESETS, preset_rows
from .genfun import ShapeParams
from .grid import GridDensity
from .heat import HeatOrder, LambdaRule, SpaceTimeGrid, diagonal_ratios, heat_error_table, solve_orderSM
from .kernels import (
    Family,
    I1_closed_form,
    PotentialSpec,
    integrand_table,
    yukawa_gaussian_closed_form_3d,
)
from .subst import SubstChain
from .tensorconv import apply_direct, apply_separable, build_separable_kernel

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_ASSERT = 0, 2, 3, 4


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# config


def read_config(path: str | None, overrides: Sequence[str]) -> dict[str, str]:
    """Flat ``key=value`` lines (``#`` starts a comment); overrides win."""
    cfg: dict[str, str] = {}
    lines = []
    if path:
        try:
            with open(path) as fh:
                lines = fh.read().splitlines()
        except OSError as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from None
    for raw in list(lines) + list(overrides):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config entry {raw!r} is not key=value")
        k, v = line.split("=", 1)
        cfg[k.strip()] = v.strip()
    return cfg


def _get(cfg, key, default, cast=str):
    if key not in cfg:
        return default
    try:
        return cast(cfg[key])
    except ValueError:
        raise UsageError(f"bad value for {key}: {cfg[key]!r}") from None


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return "" if v is None else str(v)


def _jsonable(v):
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def emit(rows: list[dict], fields: list[str], args, cfg: dict, notes: Sequence[str] = ()) -> None:
    """Write rows as CSV (with header comments) or JSON to ``--out`` or stdout."""
    if args.format == "json":
        text = json.dumps([{k: _jsonable(r.get(k)) for k in fields} for r in rows], indent=1) + "\n"
    else:
        buf = io.StringIO()
        head = {"command": args.command, **cfg}
        if getattr(args, "preset", None):
            head["preset"] = args.preset
        echo = json.dumps(head, sort_keys=True)
        buf.write(f"# tensorpot {__version__} config={echo}\n")
        for note in notes:
            buf.write(f"# {note}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(fields)
        for r in rows:
            w.writerow([_fmt(r.get(k)) for k in fields])
        text = buf.getvalue()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _subst(cfg) -> SubstChain:
    kind = _get(cfg, "subst", None)
    a = _get(cfg, "sa", 1.0, float)
    b = _get(cfg, "sb", 1.0, float)
    if kind is None:
        kind = "single" if cfg.get("family", "I1") in ("K1", "KM") else "waldvogel"
    if kind == "waldvogel":
        return SubstChain.waldvogel(a, b)
    if kind == "single":
        return SubstChain.single(b)
    raise UsageError(f"unknown substitution {kind!r}")


def _family(cfg) -> Family:
    name = _get(cfg, "family", "I1")
    M = _get(cfg, "M", 1 if name in ("I1", "K1") else 2, int)
    a2 = _get(cfg, "a2", None, float)
    a = math.sqrt(a2) if a2 is not None else _get(cfg, "a", 0.0, float)
    try:
        return Family(name, M, a)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# ---------------------------------------------------------------------------
# subcommands


def cmd_quadtable(args, cfg) -> int:
    if args.preset:
        rows_in = [(r.family, r.n, r.subst, r.target_eps, r) for r in preset_rows(args.preset)]
    else:
        eps = _floats(_get(cfg, "eps", "1e-1,1e-3,1e-5,1e-7,1e-9,1e-11"))
        if not eps:
            raise UsageError("empty eps list")
        fam, subst = _family(cfg), _subst(cfg)
        rows_in = [(fam, n, subst, e, None) for n in _ints(_get(cfg, "n", "3")) for e in eps]
    xmax = _get(cfg, "xmax", 1e3, float)
    timing = _get(cfg, "timing", 0, int)
    fields = CSV_FIELDS + (["published_h0", "published_nodes", "within_band"] if args.preset else [])
    out, failed, missed = [], 0, 0
    for fam, n, subst, e, pub in rows_in:
        try:
            rep = node_search(fam, n, subst, e, xmax)
            row = rep.row()
        except (NodeSearchFailure, ReferenceNonConvergence) as exc:
            print(f"search failed: {exc}", file=sys.stderr)
            failed += 1
            row = dict(family=fam.label(), n=n, subst=subst.kind, a=subst.a, b=subst.b, target_eps=e,
                       h0=float("nan"), node_count=-1, achieved_eps=float("nan"), seconds=0.0)
        if not timing:
            row["seconds"] = None
        if pub is not None:
            ok = row["node_count"] > 0 and pub.within_band(row["node_count"])
            missed += not ok
            row.update(published_h0=pub.h0, published_nodes=pub.nodes, within_band=int(ok))
        out.append(row)
    emit(out, fields, args, cfg)
    if failed:
        return EXIT_NUMERIC
    if args.assert_paper and missed:
        print(f"{missed} rows outside the +-25% node-count band", file=sys.stderr)
        return EXIT_ASSERT
    return EXIT_OK


def _density(cfg, n: int, h: float, half: int) -> GridDensity:
    kind = _get(cfg, "density", "gaussian")
    if kind == "gaussian":
        return GridDensity.centered(lambda *y: np.exp(-sum(c * c for c in y)), h, half, n)
    if kind == "delta":
        vals = np.zeros((2 * half + 1,) * n)
        vals[(half,) * n] = 1.0
        return GridDensity(h, (-half,) * n, vals)
    try:
        dens = GridDensity.load(kind)
    except OSError as exc:
        raise UsageError(f"cannot read density {kind}: {exc}") from None
    if dens.n != n:
        raise UsageError(f"density file has n={dens.n} but config has n={n}")
    return dens


def cmd_potential(args, cfg) -> int:
    try:
        spec = PotentialSpec(_get(cfg, "operator", "harmonic"), _get(cfg, "n", 3, int), _get(cfg, "M", 1, int),
                             _get(cfg, "a", 0.0, float))
        params = ShapeParams(_get(cfg, "D", 2.0, float), _get(cfg, "D0", 2.0, float))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    h = _get(cfg, "h", 0.5, float)
    half = _get(cfg, "half", 8, int)
    eps = _get(cfg, "eps", 1e-5, float)
    dens = _density(cfg, spec.n, h, half)
    cfg.setdefault("subst", "waldvogel" if spec.operator == "harmonic" else "single")
    subst = _subst(cfg)
    fam = spec.family()
    if spec.operator == "yukawa":
        fam = Family(fam.name, fam.M, spec.a * math.sqrt(params.D) * h)
    try:
        rep = node_search(fam, spec.n, subst, eps)
        diam = max(dens.shape) - 1
        ker = build_separable_kernel(spec, params, rep.rule, subst, h, offset_cap=diam)
        ker.meta["report"] = rep
        res = apply_separable(ker, dens)
    except (NodeSearchFailure, ReferenceNonConvergence) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    notes = [f"rank={ker.rank} P={ker.P} h0={rep.h0:.6g}"]
    status = EXIT_OK
    if args.check_direct:
        try:
            direct = apply_direct(spec, params, dens, form="tensor").values
        except ValueError as exc:
            print(str(exc), file=sys.stderr)
            return EXIT_USAGE
        dev = float(np.max(np.abs(res.values - direct) / np.maximum(np.abs(direct), 1e-300)))
        notes.append(f"max relative deviation vs direct = {dev:.3e}")
        print(f"max relative deviation vs direct = {dev:.3e}", file=sys.stderr)
        if dev > 2 * eps:
            status = EXIT_ASSERT
    if args.binary:
        res.save(args.binary)
    fields = [f"k{j + 1}" for j in range(spec.n)] + ["value"]
    rows = []
    for idx in np.ndindex(*dens.shape):
        r = {f"k{j + 1}": int(dens.m_min[j] + idx[j]) for j in range(spec.n)}
        r["value"] = float(res.values[idx])
        rows.append(r)
    emit(rows, fields, args, cfg, notes)
    return status


_SAFE = {k: getattr(np, k) for k in ("sin", "cos", "exp", "log", "sqrt", "pi", "tanh", "cosh", "sinh", "abs")}


def _expr(text: str):
    code = compile(text, "<source>", "eval")
    names = set(code.co_names) - set(_SAFE) - {"x", "t"}
    if names:
        raise UsageError(f"unknown names in expression: {sorted(names)}")

    def f(X, t):
        return eval(code, {"__builtins__": {}}, {**_SAFE, "x": X[..., 0], "t": t}) + 0.0 * X[..., 0]

    return f


def cmd_heat(args, cfg) -> int:
    problem = _get(cfg, "problem", "x2t2")
    x = _get(cfg, "x", 0.01, float)
    t = _get(cfg, "t", 0.01, float)
    T = _get(cfg, "T", t, float)
    if not (t > 0 and T > 0):
        raise UsageError("probe time t and horizon T must be positive")
    params = ShapeParams(_get(cfg, "D", 2.0, float), _get(cfg, "D0", 2.0, float))
    nu = _get(cfg, "nu", 1.0, float)
    order = HeatOrder(_get(cfg, "M", 1, int), _get(cfg, "S", 1, int))
    steps = _ints(_get(cfg, "inv_steps", ",".join(map(str, HEAT_INV_STEPS))))
    exact = None
    if problem == "x2t2":
        from .heat import x2t2_exact, x2t2_source

        u, exact = x2t2_source, x2t2_exact
    elif problem == "sinx":
        def u(Y, tt):
            return np.sin(Y[..., 0])

        def exact(xx, tt):
            return math.sin(float(np.atleast_1d(xx)[0])) * (1.0 - math.exp(-nu * tt)) / nu
    elif problem == "custom":
        u = _expr(_get(cfg, "source", "0"))
        if "exact" in cfg:
            fx = _expr(cfg["exact"])

            def exact(xx, tt):
                return float(fx(np.array([[float(np.atleast_1d(xx)[0])]]), tt)[0])
    else:
        raise UsageError(f"unknown heat problem {problem!r}")

    if "probes" in cfg:
        h = _get(cfg, "h", 1 / 64, float)
        tau = _get(cfg, "tau", 1 / 64, float)
        probes = []
        for item in cfg["probes"].split(","):
            px, pt = item.split(":")
            probes.append((np.array([float(px)]), float(pt)))
        grid = SpaceTimeGrid(1, h, tau, nu, T=max(T, max(p[1] for p in probes)))
        vals = solve_orderSM(u, grid, params, order, probes, LambdaRule())
        rows = []
        for (px, pt), v in zip(probes, vals):
            fe = exact(px, pt) if exact else None
            rows.append(dict(x=float(px[0]), t=pt, f_approx=float(v), f_exact=fe,
                             error=(float(v) - fe) if exact else None))
        emit(rows, ["x", "t", "f_approx", "f_exact", "error"], args, cfg)
        return EXIT_OK

    table = heat_error_table(u, exact, steps, x, t, params, nu, order)
    col = "error" if exact else "f_approx"
    rows = [dict(tau_inv=ti, h_inv=hi, **{col: float(table[a, b])})
            for a, ti in enumerate(steps) for b, hi in enumerate(steps)]
    notes = []
    if exact:
        notes.append("diagonal_ratios=" + ",".join(format(r, ".4f") for r in diagonal_ratios(table)))
    emit(rows, ["tau_inv", "h_inv", col], args, cfg, notes)
    if args.assert_paper:
        if problem != "x2t2" or list(steps) != list(HEAT_INV_STEPS) or (x, t) != (0.01, 0.01):
            raise UsageError("--assert-paper needs the default x2t2 configuration")
        dev = np.abs(np.abs(table) / np.array(HEAT_TABLE) - 1.0)
        if np.any(dev > 0.15):
            print(f"{int(np.sum(dev > 0.15))} cells deviate by more than 15%", file=sys.stderr)
            return EXIT_ASSERT
    return EXIT_OK


def cmd_kernel_eval(args, cfg) -> int:
    fam = _family(cfg)
    n = _get(cfg, "n", 3, int)
    subst = _subst(cfg)
    xs = _floats(_get(cfg, "x", "0,1,10,100,500,1000"))
    if "u" in cfg:
        lo, hi, cnt = _floats(cfg["u"])
        u = np.linspace(lo, hi, int(cnt))
        rows = []
        for x in xs:
            vals = integrand_table(fam, n, subst, u, x)[0]
            rows += [dict(x=x, u=float(uu), f=float(v)) for uu, v in zip(u, vals)]
        emit(rows, ["x", "u", "f"], args, cfg)
        return EXIT_OK
    eps = _get(cfg, "eps", 1e-11, float)
    try:
        rule = node_search(fam, n, subst, eps).rule
    except (NodeSearchFailure, ReferenceNonConvergence) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    rows = []
    for x in xs:
        quad = float(rule.h * np.sum(integrand_table(fam, n, subst, rule.nodes, x)[0]))
        closed = None
        if fam.name == "I1":
            closed = float(I1_closed_form(x, n))
        elif fam.name == "K1" and n == 3:
            closed = 4.0 * float(yukawa_gaussian_closed_form_3d(x, fam.a))
        pt = np.full(n, x / math.sqrt(n))
        try:
            ref = reference_value(fam, n, pt)
        except ReferenceNonConvergence:
            ref = float("nan")
        rows.append(dict(family=fam.label(), n=n, x=x, quadrature=quad, reference=ref, closed_form=closed))
    emit(rows, ["family", "n", "x", "quadrature", "reference", "closed_form"], args, cfg)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat key=value config file")
    common.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--preset", choices=sorted(PRESETS), help="published table to reproduce")
    common.add_argument("--assert-paper", action="store_true", help="fail (exit 4) outside the published bands")
    common.add_argument("--threads", type=int, default=0, help="worker threads (0 = auto)")
    common.add_argument("overrides", nargs="*", metavar="key=value", help="config overrides")

    p = argparse.ArgumentParser(prog="tensorpot", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"tensorpot {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("quadtable", parents=[common], help="node-count tables for the t-integrals")
    pot = sub.add_parser("potential", parents=[common], help="separable cubature of a potential on a grid")
    pot.add_argument("--check-direct", action="store_true", help="compare with the dense convolution")
    pot.add_argument("--binary", metavar="PATH", help="also save the result grid in binary form")
    sub.add_parser("heat", parents=[common], help="heat-equation error table or probe values")
    sub.add_parser("kernel-eval", parents=[common], help="point values and integrand sweeps")
    return p


_COMMANDS = {"quadtable": cmd_quadtable, "potential": cmd_potential, "heat": cmd_heat, "kernel-eval": cmd_kernel_eval}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = read_config(args.config, args.overrides)
        if args.threads < 0:
            raise UsageError("--threads must be >= 0")
        if args.threads:
            os.environ.setdefault("OMP_NUM_THREADS", str(args.threads))
        return _COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FloatingPointError, OverflowError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
