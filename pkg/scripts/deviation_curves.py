"""Probability of a duty-cycle at least b/K away from 0.5, for several K.

    python scripts/deviation_curves.py --K 20 40 80 160 --rho 0.5 --out out/curves
"""

import argparse
from pathlib import Path

from agesim import report
from agesim.probmodel import deviation_curve, p_at_least_n


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--K", type=int, nargs="+", default=[20, 40, 80, 160])
    ap.add_argument("--rho", type=float, default=0.5)
    ap.add_argument("--cells", type=int, default=8192)
    ap.add_argument("--out", default="out/curves")
    args = ap.parse_args()

    for K in args.K:
        curve = deviation_curve(K, args.rho)
        report.emit(curve, Path(args.out) / f"K{K}")
        # P(at least one cell strays beyond 0.3 / 0.7)
        b = int(0.3 * K)
        print(f"K={K:4d}: P(dev, b={b}) = {curve[b, 2]:.4g}, "
              f"P(>=1 of {args.cells} cells) = {p_at_least_n(K, args.rho, b, args.cells, 1):.4g}")


if __name__ == "__main__":
    main()
