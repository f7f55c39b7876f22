"""Born series, stationary wave operator and the L^p probe on the radial sector."""

import argparse
import time

from biharm4 import grid as gr
from biharm4 import waveop as wo


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--depths", type=float, nargs="+", default=[0.01, 0.05, 0.2])
    ap.add_argument("--cutoff-a", type=float, default=1.0)
    args = ap.parse_args()
    g = gr.build_grid(16, 8.0)
    u = wo.TestFunction.bump()
    print(f"{'depth':>6} {'|W1|':>9} {'|W2|/|W1|':>10} {'|W3|/|W2|':>10} {'iso':>12} "
          f"{'|W-born|':>9} {'3|W3|':>9} {'probe max':>9} {'sec':>5}")
    for depth in args.depths:
        t = time.perf_counter()
        sec = wo.RadialSector.from_potential(gr.gaussian_well(g, depth))
        W = wo.born_terms(u, sec, 3, args.cutoff_a)
        n = [sec.norm(w) for w in W]
        base = u.radial_values(sec.r)
        S = wo.stationary_wave_op(u, sec, args.cutoff_a)
        probe = max(abs(r.ratio - 1) for r in wo.lp_probe(sec, a=args.cutoff_a)) + 1
        print(f"{depth:6.2f} {n[0]:9.2e} {n[1] / n[0]:10.2e} {n[2] / n[1]:10.2e} "
              f"{sec.norm(S) / sec.norm(base):12.9f} {sec.norm(S - (base - W[0] + W[1])):9.2e} "
              f"{3 * n[2]:9.2e} {probe:9.4f} {time.perf_counter() - t:5.1f}")


if __name__ == "__main__":
    main()
