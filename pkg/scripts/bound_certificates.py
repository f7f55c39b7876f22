"""Numerical certificates for the kernel bounds, with the per-regime constants."""

import argparse
import json
import time

from biharm4 import bounds as bd


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--json", help="write all certificates to this file")
    args = ap.parse_args()
    t = time.perf_counter()
    certs = [bd.verify_int_L(), bd.verify_lemma91(), bd.verify_2step()] + \
        [bd.verify_R_bounds(j) for j in range(4)]
    print(f"{'bound':<14} {'C':>10} {'stability':>9} {'spread':>8} {'backends':>22}  ok")
    for c in certs:
        b = "/".join(f"{x:.4g}" for x in c.backend_constants)
        print(f"{c.bound_id:<14} {c.constant:10.4g} {c.stability_ratio:9.3f} "
              f"{c.extra.get('dyadic_spread', float('nan')):8.2f} {b:>22}  {c.passed}")
        for note in c.notes:
            print(f"{'':<14} note: {note}")
    lem = certs[1].extra
    print(f"c4 fitted {lem['c4_fit']:.10g} vs 144 pi^4 = {lem['c4_exact']:.10g}; F max {lem['F_max']:.3f}")
    print(f"{time.perf_counter() - t:.1f}s")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump([c.to_dict() for c in certs], fh, indent=2, default=float)


if __name__ == "__main__":
    main()
