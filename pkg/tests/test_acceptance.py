"""Acceptance criteria: one PASS/FAIL line per criterion.

Run under pytest (the lines are printed outside output capture) or directly
with ``python tests/test_acceptance.py``.  Each check returns ``(ok,
detail)``; tolerances and runtime limits are fixed constants below.
"""

from __future__ import annotations

import math
import sys
import time
from fractions import Fraction as F

import numpy as np
import pytest

from cuspwidth.domain import DomainSpec
from cuspwidth.empirics import fit_rate, linear_widths, norm_scaling, svd_widths
from cuspwidth.hset import build
from cuspwidth.local_approx import (
    Box,
    FieldOracle,
    adaptive_approximate,
    cell_error,
    cosine_field,
    project_cell,
)
from cuspwidth.partition import build_hset_tree, build_tree, monte_carlo_volume, partition_audit
from cuspwidth.rates import ParamSet, entropy_exponents, hset_exponents, width_exponents
from cuspwidth.treeop import WeightedTree, bound_check, operator_norm, random_tree

# limits
RUNTIME_1 = 1.0
RUNTIME_2 = 30.0
RUNTIME_3 = 10.0
RUNTIME_4 = 10.0
RUNTIME_6 = 60.0
RUNTIME_8 = 60.0
HEIGHT_LO, HEIGHT_HI = 0.25, 0.75
MC_SAMPLES = 1_000_000
MC_SIGMAS = 3.0
C_STAR = 8.0
HSET_CONSTANT = 32.0
PROJ_TOL = 1e-12
XD_TOL = 1e-10
SLOPE_6 = -1.0 / 3.0 + 0.15
TREE_CEILING = 64.0
CHAIN_TOL = 1e-6
BUMP_TOL = 0.10
SEPARATION_TOL = 0.15
WIDTH_SLOPE_TOL = 0.1


def criterion_1():
    t0 = time.perf_counter()
    fails = []
    pr = entropy_exponents(ParamSet(2, 2, 1, 2, 3))
    if (pr.alpha1, pr.alpha2) != (F(1, 2), F(1, 3)):
        fails.append(f"alphas {pr.alpha1}, {pr.alpha2}")
    pr = width_exponents(ParamSet(2, 4, 3, 2, 2, "kolmogorov"))
    if pr.thetas != (F(3, 2), F(5, 2), F(11, 8), F(9, 4)) or pr.j_star != 3:
        fails.append(f"thetas {pr.thetas}, j*={pr.j_star}")
    pr = hset_exponents(ParamSet(2, 2, 2, 3, 2, theta=1))
    if pr.magnitude != 1:
        fails.append(f"theorem-3 value {pr.magnitude}")
    pr = hset_exponents(ParamSet(2, 4, 2, 3, 2, theta=1), "plane")
    if pr.magnitude != 1:
        fails.append(f"example-1 value {pr.magnitude}")
    dt = time.perf_counter() - t0
    if dt >= RUNTIME_1:
        fails.append(f"runtime {dt:.2f}s")
    return not fails, "; ".join(fails) or f"all four tables exact ({dt * 1e3:.1f} ms)"


def criterion_2():
    t0 = time.perf_counter()
    K = 8
    domains = {
        "psi=2": DomainSpec.constant(3),
        "cusp": DomainSpec.hset_cusp(build(1.0, 3, 10), 2.0),
    }
    fails, notes = [], []
    for name, dom in domains.items():
        tree = build_tree(dom, K)
        rep = partition_audit(tree)
        if not (rep.tiling_exact and rep.chaining_exact and rep.disjoint):
            fails.append(f"{name}: tiling/disjointness")
        bad = [(lv.k, round(lv.height_min, 4), round(lv.height_max, 4)) for lv in rep.levels[1:]
               if not (HEIGHT_LO <= lv.height_min and lv.height_max <= HEIGHT_HI)]
        if bad:
            fails.append(f"{name}: scaled heights outside [1/4, 3/4] at (k, min, max) {bad}")
        vc = monte_carlo_volume(tree, MC_SAMPLES, seed=0)
        limit = 2.0 ** (-K - 1) * dom.base_area
        if not (rep.covering_defect_bound <= limit and vc.defect_mc <= limit):
            fails.append(f"{name}: covering defect {rep.covering_defect_bound:.3g} > {limit:.3g}")
        if vc.z_score > MC_SIGMAS:
            fails.append(f"{name}: Monte-Carlo volume off by {vc.z_score:.2f} SE")
        notes.append(f"{name}: z={vc.z_score:.2f}, defect<={rep.covering_defect_bound:.2g}")
    dt = time.perf_counter() - t0
    if dt >= RUNTIME_2:
        fails.append(f"runtime {dt:.1f}s")
    return not fails, "; ".join(fails + notes) + f" ({dt:.1f}s)"


def criterion_3():
    t0 = time.perf_counter()
    g = build(1.0, 3, 6)
    rep = g.regularity_check(1000, [2.0**-j for j in range(1, 7)], seed=0)
    dt = time.perf_counter() - t0
    ok = rep.ratio_max <= C_STAR and rep.ratio_min >= 1.0 / C_STAR and dt < RUNTIME_3
    return ok, f"ratio in [{rep.ratio_min:.4g}, {rep.ratio_max:.4g}] ({dt:.2f}s)"


def criterion_4():
    t0 = time.perf_counter()
    consts = {}
    for kind in ("cantor", "plane"):
        dom = DomainSpec.hset_cusp(build(1.0, 3, 10, kind=kind), 2.0)
        rep = partition_audit(build_hset_tree(dom, 6))
        consts[kind] = max(lv.hset_constant for lv in rep.levels)
    dt = time.perf_counter() - t0
    ok = all(c <= HSET_CONSTANT for c in consts.values()) and dt < RUNTIME_4
    return ok, f"max #J_k1*h(2^-n_k): {consts} ({dt:.2f}s)"


def criterion_5():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(100):
        r = int(rng.integers(1, 5))
        d = int(rng.integers(1, 4))
        lo = rng.random(d) * 2
        cell = Box(lo, lo + 0.01 + rng.random(d))
        deg = rng.integers(0, r, size=(4, d))
        coef = rng.uniform(-1, 1, 4)
        f = FieldOracle(lambda x, deg=deg, coef=coef: np.prod(x[:, None, :] ** deg[None], axis=2)
                        @ coef, poly_degree=r - 1)
        c = project_cell(f, cell, r)
        worst = max(worst, float(cell_error(f, c, cell, 2)))
    unit = Box(np.zeros(2), np.ones(2))
    xd = FieldOracle(lambda x: x[:, -1], poly_degree=1)
    e = float(cell_error(xd, project_cell(xd, unit, 1), unit, 2))
    gap = abs(e - 1 / math.sqrt(12))
    ok = worst <= PROJ_TOL and gap <= XD_TOL
    return ok, f"max residual {worst:.2e}; |x_d residual - 1/sqrt(12)| = {gap:.1e}"


def criterion_6():
    t0 = time.perf_counter()
    dom = DomainSpec.hset_cusp(build(0.5, 2, 12), 3.0)
    tree = build_tree(dom, 20)
    f = cosine_field(dom, 1, 2)
    res = adaptive_approximate(f, tree, 2**12, 1, 2, 2)
    pts = [(2**i, res.error_at(2**i)) for i in range(4, 13)]
    fit = fit_rate(pts)
    dt = time.perf_counter() - t0
    ok = fit.slope <= SLOPE_6 and dt < RUNTIME_6
    return ok, (f"slope {fit.slope:.4f} (limit {SLOPE_6:.4f}), error at 4096 = {pts[-1][1]:.3g}, "
                f"fringe {res.fringe_defect:.2g} ({dt:.1f}s)")


def criterion_7():
    rng = np.random.default_rng(0)
    worst = 0.0
    violated = 0
    for _ in range(200):
        wt = random_tree(int(rng.integers(1, 13)), rng, 2.0, 2.0, a=1.0, b=1.0)
        rep = bound_check(wt, 1.0, 1.0, TREE_CEILING)
        worst = max(worst, rep.ratio)
        violated += rep.violated
    diff = 0.0
    for _ in range(50):
        n = int(rng.integers(1, 11))
        wt = WeightedTree.chain(rng.random(n) + 0.01, rng.random(n) + 0.01)
        s = operator_norm(wt, "spectral").value
        a = operator_norm(wt, "ascent").value
        diff = max(diff, abs(s - a) / s)
    ok = violated == 0 and worst <= TREE_CEILING and diff <= CHAIN_TOL
    return ok, f"max norm/sup(gv) {worst:.4f}; spectral vs ascent {diff:.1e}"


def criterion_8():
    t0 = time.perf_counter()
    dom = DomainSpec.hset_cusp(build(1.0, 3, 7, origin=-0.5), 2.0)
    rep = norm_scaling(dom, range(1, 6), 2.0, 2.0, 1)
    err = rep.relative_errors()
    dt = time.perf_counter() - t0
    ok = (err["lq"] <= BUMP_TOL and err["grad"] <= BUMP_TOL
          and err["exponent"] <= SEPARATION_TOL and dt < RUNTIME_8)
    m, p = rep.measured, rep.predicted
    return ok, (f"L_q {m['lq']:.4f} vs {p['lq']:.4f}, grad {m['grad']:.4f} vs {p['grad']:.4f}, "
                f"separation exponent {m['exponent']:.4f} vs {p['exponent']:.4f} ({dt:.1f}s)")


def criterion_9():
    ws = svd_widths("interval", 1, 1000, [4, 8, 16, 32, 64])
    slope = fit_rate([(w.n, w.value) for w in ws]).slope
    diag = [w.value for w in linear_widths(np.diag([1.0, 0.5, 0.25]), [0, 1, 2, 3])]
    ok = abs(slope + 1.0) <= WIDTH_SLOPE_TOL and diag == [1.0, 0.5, 0.25, 0.0]
    return ok, f"interval slope {slope:.5f}; diagonal widths {diag}"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9]


def _line(i: int, ok: bool, detail: str) -> str:
    return f"{'PASS' if ok else 'FAIL'} criterion {i}: {detail}"


@pytest.mark.parametrize("i", range(1, len(CRITERIA) + 1))
def test_criterion(i, capsys):
    ok, detail = CRITERIA[i - 1]()
    with capsys.disabled():
        print("\n" + _line(i, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for i, fn in enumerate(CRITERIA, 1):
        ok, detail = fn()
        failed += not ok
        print(_line(i, ok, detail), flush=True)
    sys.exit(1 if failed else 0)
