"""Measured against predicted per-level slopes of bump-family norms.

Usage::

    python scripts/bump_scaling.py --theta 1 --sigma 2 --k 1 2 3 4 5
"""

from __future__ import annotations

import argparse

from cuspwidth.domain import DomainSpec
from cuspwidth.empirics import norm_scaling
from cuspwidth.hset import build


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--theta", type=float, default=1.0)
    ap.add_argument("--d", type=int, default=3)
    ap.add_argument("--hset-levels", type=int, default=7)
    ap.add_argument("--sigma", type=float, default=2.0)
    ap.add_argument("--k", type=int, nargs="+", default=[1, 2, 3, 4, 5])
    ap.add_argument("--p", type=float, default=2.0)
    ap.add_argument("--q", type=float, default=2.0)
    ap.add_argument("--r", type=int, default=1)
    args = ap.parse_args(argv)

    # centre the set so that bumps stay clear of the base boundary
    hs = build(args.theta, args.d, args.hset_levels, origin=-0.5)
    rep = norm_scaling(DomainSpec.hset_cusp(hs, args.sigma), args.k, args.p, args.q, args.r)
    err = rep.relative_errors()
    print("quantity,measured,predicted,relative_error")
    for key in rep.predicted:
        print(f"{key},{rep.measured[key]:.6f},{rep.predicted[key]:.6f},{err.get(key, 0.0):.3e}")


if __name__ == "__main__":
    main()
