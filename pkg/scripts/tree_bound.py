"""Operator norm of random weighted-tree summation operators against the bound.

Usage::

    python scripts/tree_bound.py --trials 200 --seed 0
"""

from __future__ import annotations

import argparse

import numpy as np

from cuspwidth.treeop import bound_check, random_tree


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--max-depth", type=int, default=12)
    ap.add_argument("--p", type=float, default=2.0)
    ap.add_argument("--q", type=float, default=2.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    ratios, violated = [], 0
    for _ in range(args.trials):
        wt = random_tree(int(rng.integers(1, args.max_depth + 1)), rng, args.p, args.q,
                         a=1.0, b=1.0)
        rep = bound_check(wt, 1.0, 1.0, 64.0)
        ratios.append(rep.ratio)
        violated += rep.violated
    r = np.asarray(ratios)
    print(f"trials {args.trials}: ratio max {r.max():.4f}, median {np.median(r):.4f}, "
          f"violations {violated}")


if __name__ == "__main__":
    main()
