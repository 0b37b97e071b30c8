#!/usr/bin/env python3
"""Print the predicted remainder regime of u - u_N for a few (n, p) pairs."""
import argparse

from heatlab.analysis import fujita_exponent, predict_regime


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--N", type=int, default=3, help="largest approximant level")
    ap.add_argument("--offsets", type=float, nargs="+", default=[0.5, 1.0, 2.0, 3.0],
                    help="p - p_F values to tabulate")
    args = ap.parse_args()
    print(f"{'n':>2} {'p':>6} {'sigma':>6} {'N':>2}  regime")
    for n in args.n:
        for off in args.offsets:
            p = fujita_exponent(n) + off
            for N in range(1, args.N + 1):
                r = predict_regime(N, n, p)
                print(f"{n:>2} {p:>6.2f} {r.sigma:>6.2f} {N:>2}  {r.form}")


if __name__ == "__main__":
    main()
