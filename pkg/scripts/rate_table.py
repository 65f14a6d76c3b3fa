"""Print predicted width exponents over a small parameter grid.

Usage::

    python scripts/rate_table.py --d 2 --sigma 3 --r 1 2 --kind entropy
"""

from __future__ import annotations

import argparse
import itertools

from cuspwidth.errors import ValidationError
from cuspwidth.rates import ParamSet, fraction_str, predict


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d", type=int, default=2)
    ap.add_argument("--sigma", default="2")
    ap.add_argument("--r", type=int, nargs="+", default=[1, 2])
    ap.add_argument("--p", nargs="+", default=["1", "2", "inf"])
    ap.add_argument("--q", nargs="+", default=["2", "4", "inf"])
    ap.add_argument("--kind", default="entropy", choices=["entropy", "kolmogorov", "linear", "gelfand"])
    args = ap.parse_args(argv)

    print("p,q,r,d,sigma,kind,alpha1,alpha2,j_star,exponent,tau")
    for p, q, r in itertools.product(args.p, args.q, args.r):
        p_, q_ = (float(x) if x == "inf" else x for x in (p, q))
        try:
            pr = predict(ParamSet(p_, q_, r, args.d, args.sigma, args.kind))
        except ValidationError as exc:
            print(f"{p},{q},{r},{args.d},{args.sigma},{args.kind},,,,,{type(exc).__name__}")
            continue
        print(",".join([p, q, str(r), str(args.d), args.sigma, args.kind,
                        fraction_str(pr.alpha1), fraction_str(pr.alpha2), str(pr.j_star),
                        fraction_str(pr.exponent), pr.tau_kind]))


if __name__ == "__main__":
    main()
