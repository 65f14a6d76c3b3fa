"""SVD widths of the ``H^1 → L_2`` embedding on an interval.

The exact values are ``(1 + (nπ)^2)^{-1/2}``; the script prints both and
the fitted slope (expected ``−1``).

Usage::

    python scripts/width_anchor.py --grid 1000 --n 4 8 16 32 64
"""

from __future__ import annotations

import argparse
import math

from cuspwidth.empirics import fit_rate, svd_widths


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", type=int, default=1000)
    ap.add_argument("--n", type=int, nargs="+", default=[4, 8, 16, 32, 64])
    args = ap.parse_args(argv)

    ws = svd_widths("interval", 1, args.grid, args.n)
    print("n,svd,exact")
    for w in ws:
        print(f"{w.n},{w.value:.17g},{1 / math.sqrt(1 + (w.n * math.pi) ** 2):.17g}")
    if len(ws) >= 4:
        print(f"slope {fit_rate([(w.n, w.value) for w in ws]).slope:.5f}")


if __name__ == "__main__":
    main()
