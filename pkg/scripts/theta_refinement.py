"""Turning of the separating loop away from its corner as the folded torus
mesh is refined.

Angular resolution ``n`` controls how closely the polygonal loop follows a
geodesic; Steiner subdivision leaves the loop (and so theta) unchanged.
Writes a CSV to stdout.
"""

import argparse
import csv
import sys

from collapse_lab.curvature import gauss_bonnet_region
from collapse_lab.families import fold_step_ratio, folded_torus
from collapse_lab.homology import shortest_basis
from collapse_lab.mesh import steiner_refine
from collapse_lab.surgery import separating_loop


def measure(s):
    sep = separating_loop(s, shortest_basis(s))
    (bp,) = sep.M.copies_of(sep.p)
    rep = gauss_bonnet_region(sep.M, bp)
    others = [t for v, t in rep.turning.items() if v != bp]
    return {"lambda": sep.loop.length, "interior": rep.interior_sum, "basepoint_turning": rep.basepoint_turning,
            "theta": abs(sum(others)), "theta_max_vertex": max(abs(t) for t in others)}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--t", type=float, default=0.9)
    ap.add_argument("--r", type=float, default=0.05)
    ap.add_argument("--n", type=int, nargs="+", default=[32, 48, 64])
    ap.add_argument("--m", type=int, default=40)
    ap.add_argument("--steiner", type=int, default=2, help="also measure Steiner level k at the first n")
    args = ap.parse_args()
    w = csv.DictWriter(sys.stdout, fieldnames=["n", "k", "n_vertices", "fold_step_over_r", "lambda", "interior",
                                               "basepoint_turning", "theta", "theta_max_vertex"])
    w.writeheader()
    d = args.r * (1 - args.t)
    for n in args.n:
        s = folded_torus(args.t, args.r, n, args.m)
        w.writerow({"n": n, "k": 1, "n_vertices": s.n_vertices, "fold_step_over_r": fold_step_ratio(s, d),
                    **measure(s)})
        sys.stdout.flush()
    if args.steiner > 1:
        s = steiner_refine(folded_torus(args.t, args.r, args.n[0], args.m), args.steiner)
        w.writerow({"n": args.n[0], "k": args.steiner, "n_vertices": s.n_vertices, "fold_step_over_r": "",
                    **measure(s)})


if __name__ == "__main__":
    main()
