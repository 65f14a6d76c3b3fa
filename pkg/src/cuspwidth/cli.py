"""Command-line front end: ``cuspwidth <subcommand> …``.

Exit codes: 0 on success, 2 on invalid input (a JSON object
``{"error": kind, "message": text}`` is written to stderr), 3 on I/O
failure.  Floats are written with 17 significant digits, exact rationals as
``"p/q"`` strings.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import empirics, rates, treeop
from ._numerics import format_float
from .domain import DomainSpec
from .errors import DataError, ParameterError, ValidationError
from .hset import HSet, build
from .local_approx import FieldOracle, adaptive_approximate, cosine_field
from .partition import PartitionTree, partition_audit

DEFAULT_SEED = 20240607
MAX_CSV_CELLS = 1 << 21


class _ArgError(ValidationError):
    kind = "usage"


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route usage errors through the JSON channel
        raise _ArgError(message)


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def to_json(obj) -> str:
    """JSON text with floats at 17 significant digits and Fractions as strings."""
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, Fraction):
        return json.dumps(rates.fraction_str(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "null"
        if math.isinf(x):
            return json.dumps("inf" if x > 0 else "-inf")
        return format_float(x)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {to_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(to_json(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return "" if math.isnan(x) else format_float(x)
    if isinstance(x, Fraction):
        return rates.fraction_str(x)
    return str(x)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


class _Ctx:
    def __init__(self, args):
        self.seed = args.seed
        self.threads = args.threads
        self.out_dir = Path(args.out_dir) if args.out_dir else None

    def path(self, name: str) -> Path:
        p = Path(name)
        if self.out_dir is not None and not p.is_absolute():
            p = self.out_dir / p
        return p

    def emit(self, text: str, out: str | None):
        if out is None:
            sys.stdout.write(text if text.endswith("\n") else text + "\n")
            return
        p = self.path(out)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")


def _read_json(path: str):
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc.msg})") from None


def _exponent(text: str):
    try:
        return rates.as_fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ParameterError(f"not a number: {text!r}") from None


def _real(text: str) -> float:
    if text.strip().lower() in ("inf", "infinity"):
        return math.inf
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise ParameterError(f"not a number: {text!r}") from None


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _prediction_dict(pr: rates.RatePrediction) -> dict:
    return {
        "alpha1": pr.alpha1,
        "alpha2": pr.alpha2,
        "thetas": list(pr.thetas) if pr.thetas is not None else None,
        "j_star": pr.j_star,
        "exponent": pr.exponent,
        "tau_kind": pr.tau_kind,
        "q_hat": None if pr.q_hat is None else rates.fraction_str(pr.q_hat),
        "magnitude": pr.magnitude,
    }


def cmd_rates(args, ctx: _Ctx) -> int:
    lam = rates.SlowVariation.parse(args.lambda_)
    ps = rates.ParamSet(_exponent(args.p), _exponent(args.q), args.r, args.d,
                        _exponent(args.sigma), args.width,
                        None if args.theta is None else _exponent(args.theta), lam)
    if args.theta is not None:
        pr = rates.hset_exponents(ps, "plane" if args.plane else "general")
    elif args.plane:
        raise ParameterError("--plane needs --theta")
    else:
        pr = rates.predict(ps)
    out = _prediction_dict(pr)
    out["tau"] = None if args.n is None else rates.tau_factor(ps, args.n, pr.tau_kind)
    out["feasible"] = pr.feasible
    out["width"] = args.width
    if args.theta is not None:
        out["variant"] = "plane" if args.plane else "general"
        out["generic"] = None if pr.generic is None else _prediction_dict(pr.generic)
    ctx.emit(to_json(out), args.out)
    return 0


def _load_domain(path: str) -> DomainSpec:
    return DomainSpec.from_dict(_read_json(path))


def cmd_partition(args, ctx: _Ctx) -> int:
    dom = _load_domain(args.domain)
    variant = "hset_pruned" if args.variant == "hset" else "full"
    tree = PartitionTree(dom, args.levels, variant)
    total = sum(tree.level(k).count for k in range(args.levels + 1))
    if total > MAX_CSV_CELLS:
        raise ParameterError(f"tree has {total} cells; the CSV dump is limited to {MAX_CSV_CELLS}")
    k = dom.dim - 1
    header = (["level", "index", "parent_index", "role"]
              + [f"base_lo_{i + 1}" for i in range(k)] + [f"base_hi_{i + 1}" for i in range(k)]
              + ["c_minus", "c_plus", "tail_top"])
    rows = ((c.level, c.index, c.parent, c.role, *c.base_lo.tolist(), *c.base_hi.tolist(),
             c.c_minus, c.c_plus, c.tail_top) for c in tree.iter_cells())
    ctx.emit(csv_text(header, rows), args.out)
    if args.audit:
        rep = partition_audit(tree)
        summary = {
            "variant": rep.variant, "max_level": rep.max_level,
            "tiling_exact": rep.tiling_exact, "chaining_exact": rep.chaining_exact,
            "disjoint": rep.disjoint, "max_branching": rep.max_branching,
            "root_branching": rep.root_branching, "covered_measure": rep.covered_measure,
            "covering_defect_bound": rep.covering_defect_bound,
            "levels": [{"k": lv.k, "cells": lv.cells, "height_min": lv.height_min,
                        "height_max": lv.height_max} for lv in rep.levels],
        }
        ctx.emit(to_json(summary), args.audit if args.audit != "-" else None)
    return 0


def _load_field(spec: str, dom: DomainSpec, r: int, p: float) -> FieldOracle:
    if spec == "cosine":
        return cosine_field(dom, r, p)
    if spec == "const":
        return FieldOracle.constant(1.0)
    if spec == "xd":
        return FieldOracle(lambda x: x[:, -1], poly_degree=1, name="xd")
    if not os.path.exists(spec):
        raise ParameterError(f"unknown function {spec!r} (use cosine, const, xd or a JSON file)")
    data = _read_json(spec)
    if not isinstance(data, dict) or data.get("kind") != "cosine":
        raise ParameterError("function files must describe {\"kind\": \"cosine\", …}")
    return cosine_field(dom, r, p, data.get("amplitudes"), data.get("freqs"),
                        data.get("phases"), bool(data.get("normalize", True)))


def cmd_approx(args, ctx: _Ctx) -> int:
    dom = _load_domain(args.domain)
    p, q = _real(args.p), _real(args.q)
    f = _load_field(args.function, dom, args.r, p)
    tree = PartitionTree(dom, args.levels)
    budgets = sorted({min(2**i, args.budget) for i in range(args.budget.bit_length() + 1)})
    if args.budget < 1:
        raise ParameterError("budget must be a positive integer")
    rows = []
    for b in budgets:
        res = adaptive_approximate(f, tree, b, args.r, p, q)
        rows.append((b, len(res.poly), res.error, res.fringe_defect))
    ctx.emit(csv_text(["budget", "pieces", "error", "fringe_defect"], rows), args.out)
    return 0


def cmd_hset(args, ctx: _Ctx) -> int:
    if args.action == "build":
        hs = build(_real(args.theta), args.dim, args.depth, args.kind, origin=args.origin)
        ctx.emit(to_json(hs.to_dict()), args.out)
        if args.cells:
            header = ["level"] + [f"center_{i + 1}" for i in range(hs.ambient_dim)] + [
                "halfwidth", "mass"]
            ctx.emit(csv_text(header, hs.cell_rows()), args.cells)
        return 0
    hs = HSet.from_dict(_read_json(args.hset))
    t_grid = [2.0**-j for j in range(1, hs.depth + 1)]
    rep = hs.regularity_check(args.samples, t_grid, seed=ctx.seed)
    ctx.emit(to_json({"ratio_max": rep.ratio_max, "ratio_min": rep.ratio_min,
                      "c_star": rep.c_star, "passed": rep.passed,
                      "samples": rep.samples}), args.out)
    return 0


def cmd_treeop(args, ctx: _Ctx) -> int:
    wt = treeop.WeightedTree.from_dict(_read_json(args.tree), _real(args.p), _real(args.q))
    if args.action == "norm":
        est = treeop.operator_norm(wt, args.method, seed=ctx.seed)
        out = {"norm": est.value, "method": est.method, "exact": est.exact,
               "lower_bound": not est.exact}
    elif args.action == "decay":
        out = {"holds": treeop.decay_check(wt, args.a, args.b), "a": args.a, "b": args.b}
    else:
        rep = treeop.bound_check(wt, args.a, args.b, args.ceiling, seed=ctx.seed)
        out = {"norm_lb": rep.norm_lb, "bound": rep.bound, "ratio": rep.ratio,
               "ceiling": rep.ceiling, "violated": rep.violated, "method": rep.method}
    ctx.emit(to_json(out), args.out)
    return 0


def cmd_verify(args, ctx: _Ctx) -> int:
    if args.action == "bumps":
        depth = args.kmax + 2
        hs = build(_real(args.theta), args.d, depth, "cantor", origin=-0.5)
        dom = DomainSpec.hset_cusp(hs, _real(args.sigma))
        p, q = _real(args.p), _real(args.q)
        rep = empirics.norm_scaling(dom, range(args.kmin, args.kmax + 1), p, q, args.r)
        rows = [(n.k, n.count, empirics.bump_family(dom, n.k, args.r).b_k, n.lq, n.lp,
                 n.grad_lp, n.separation) for n in rep.norms]
        ctx.emit(csv_text(["k", "count", "b_k", "lq", "lp", "grad_lp", "separation"], rows),
                 args.out)
        ctx.emit(to_json({"measured": rep.measured, "predicted": rep.predicted}), None)
        return 0
    if args.action == "widths":
        target = "interval" if args.domain == "interval" else _load_domain(args.domain)
        ws = empirics.svd_widths(target, args.r, args.grid, range(0, args.nmax + 1))
        ctx.emit(csv_text(["n", "width"], [(w.n, w.value) for w in ws]), args.out)
        return 0
    text = Path(args.csv).read_text(encoding="utf-8")
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or args.xcol not in reader.fieldnames \
            or args.ycol not in reader.fieldnames:
        raise DataError(f"columns {args.xcol!r}/{args.ycol!r} not found")
    try:
        pts = [(float(row[args.xcol]), float(row[args.ycol])) for row in reader]
    except (TypeError, ValueError):
        raise DataError("non-numeric entries in the selected columns") from None
    fit = empirics.fit_rate(pts)
    ctx.emit(to_json({"slope": fit.slope, "intercept": fit.intercept,
                      "max_residual": fit.max_residual, "points": len(pts)}), args.out)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _globals(parser: argparse.ArgumentParser, suppress: bool):
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--seed", type=int, default=d if suppress else DEFAULT_SEED,
                        help=f"seed for all stochastic sampling (default {DEFAULT_SEED})")
    parser.add_argument("--threads", type=int, default=d if suppress else 1,
                        help="worker threads (computations are single-threaded; recorded only)")
    parser.add_argument("--out-dir", default=d, help="directory for relative output paths")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="cuspwidth", description=__doc__.splitlines()[0])
    _globals(ap, False)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_, description=help_)
        _globals(sp, True)
        return sp

    sp = add("rates", "exact rate exponents")
    sp.add_argument("--p", required=True)
    sp.add_argument("--q", required=True)
    sp.add_argument("--r", type=int, required=True)
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--sigma", required=True)
    sp.add_argument("--theta")
    sp.add_argument("--plane", action="store_true", help="coordinate-plane h-set variant")
    sp.add_argument("--width", choices=rates.WIDTH_KINDS, default="entropy")
    sp.add_argument("--lambda", dest="lambda_", default="const", help="const or logpow:B")
    sp.add_argument("--n", type=int, help="evaluate the tau factor at n")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_rates)

    sp = add("partition", "build a partition tree and dump its cells")
    sp.add_argument("--domain", required=True, help="domain JSON")
    sp.add_argument("--levels", type=int, required=True)
    sp.add_argument("--variant", choices=("full", "hset"), default="full")
    sp.add_argument("--audit", help="write an audit JSON here ('-' for stdout)")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_partition)

    sp = add("approx", "adaptive piecewise-polynomial approximation errors")
    sp.add_argument("--domain", required=True)
    sp.add_argument("--function", default="cosine", help="cosine, const, xd or a JSON file")
    sp.add_argument("--budget", type=int, required=True)
    sp.add_argument("--r", type=int, default=1)
    sp.add_argument("--p", default="2")
    sp.add_argument("--q", default="2")
    sp.add_argument("--levels", type=int, default=16, help="tree depth K")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_approx)

    sp = add("hset", "build or check an h-set")
    hs = sp.add_subparsers(dest="action", required=True, parser_class=_Parser)
    b = hs.add_parser("build", help="build an h-set")
    _globals(b, True)
    b.add_argument("--theta", required=True)
    b.add_argument("--dim", type=int, required=True, help="domain dimension d")
    b.add_argument("--depth", type=int, required=True)
    b.add_argument("--kind", choices=("cantor", "plane"), default="cantor")
    b.add_argument("--origin", type=float, default=0.0)
    b.add_argument("--cells", help="also dump construction cells as CSV")
    b.add_argument("--out")
    c = hs.add_parser("check", help="regularity check")
    _globals(c, True)
    c.add_argument("--hset", required=True)
    c.add_argument("--samples", type=int, default=1000)
    c.add_argument("--out")
    sp.set_defaults(func=cmd_hset)

    sp = add("treeop", "summation operators on trees")
    ts = sp.add_subparsers(dest="action", required=True, parser_class=_Parser)
    for name in ("norm", "decay", "bound"):
        t = ts.add_parser(name)
        _globals(t, True)
        t.add_argument("--tree", required=True, help='JSON {"parents", "g", "v"}')
        t.add_argument("--p", default="2")
        t.add_argument("--q", default="2")
        if name == "norm":
            t.add_argument("--method", choices=("spectral", "ascent", "exhaustive"),
                           default="ascent")
        else:
            t.add_argument("--a", type=float, default=1.0)
            t.add_argument("--b", type=float, default=1.0)
        if name == "bound":
            t.add_argument("--ceiling", type=float, default=treeop.DEFAULT_CEILING)
        t.add_argument("--out")
    sp.set_defaults(func=cmd_treeop)

    sp = add("verify", "empirical checks")
    vs = sp.add_subparsers(dest="action", required=True, parser_class=_Parser)
    v = vs.add_parser("bumps", help="bump-norm scaling")
    _globals(v, True)
    v.add_argument("--theta", required=True)
    v.add_argument("--sigma", required=True)
    v.add_argument("--d", type=int, required=True)
    v.add_argument("--kmin", type=int, default=1)
    v.add_argument("--kmax", type=int, required=True)
    v.add_argument("--p", default="2")
    v.add_argument("--q", default="2")
    v.add_argument("--r", type=int, default=1)
    v.add_argument("--out")
    v = vs.add_parser("widths", help="SVD widths")
    _globals(v, True)
    v.add_argument("--domain", required=True, help="domain JSON or 'interval'")
    v.add_argument("--r", type=int, default=1)
    v.add_argument("--grid", type=int, required=True)
    v.add_argument("--nmax", type=int, required=True)
    v.add_argument("--out")
    v = vs.add_parser("slope", help="log-log slope of a CSV")
    _globals(v, True)
    v.add_argument("--csv", required=True)
    v.add_argument("--xcol", default="n")
    v.add_argument("--ycol", default="e")
    v.add_argument("--out")
    sp.set_defaults(func=cmd_verify)
    return ap


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def run(argv=None) -> int:
    """Parse ``argv`` and dispatch; returns the process exit code."""
    try:
        parser = build_parser()
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:  # --help
            return int(exc.code or 0)
        if args.threads is not None and args.threads < 1:
            raise ParameterError("--threads must be positive")
        return args.func(args, _Ctx(args))
    except ValidationError as exc:
        return _fail(exc.kind, str(exc), 2)
    except OSError as exc:
        return _fail("io", str(exc), 3)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
