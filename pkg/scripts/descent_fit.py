"""Fit the small-lam expansion of calR at several radii and compare with the closed forms."""

import argparse

from biharm4 import kernels as kn


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--radii", type=float, nargs="+", default=[0.25, 0.5, 1.0, 2.0, 4.0])
    args = ap.parse_args()
    print(f"{'r':>6} " + " ".join(f"{k:>10}" for k in ("N0", "G2", "log4", "poly4")) + "  residual")
    for r in args.radii:
        fit = kn.fit_descent_coefficients(r)
        errs = fit.rel_errors()
        print(f"{r:6.2f} " + " ".join(f"{errs[k]:10.1e}" for k in ("N0", "G2", "log4", "poly4"))
              + f"  {fit.residual:.1e}")


if __name__ == "__main__":
    main()
