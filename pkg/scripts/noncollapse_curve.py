"""GH bound, area ratio and curvature along a finer folded torus sweep;
CSV to stdout."""

import argparse
import csv
import sys

import numpy as np

from collapse_lab.curvature import min_curvature_density
from collapse_lab.families import folded_torus
from collapse_lab.metric_lab import area_bound_check, gh_segment_upper_bound


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--r", type=float, default=0.05)
    ap.add_argument("--t", type=float, nargs="+", default=list(np.round(np.linspace(0.0, 0.95, 20), 4)))
    ap.add_argument("--n", type=int, default=32)
    ap.add_argument("--m", type=int, default=40)
    args = ap.parse_args()
    w = csv.DictWriter(sys.stdout, fieldnames=["t", "n_vertices", "nu_hat", "I_len", "area", "area_over_I_nu",
                                               "min_density"])
    w.writeheader()
    for t in args.t:
        s = folded_torus(float(t), args.r, args.n, args.m)
        gh = gh_segment_upper_bound(s)
        ab = area_bound_check(s, gh.nu_hat, gh.I_len, f=gh.f)
        dens, _ = min_curvature_density(s)
        w.writerow({"t": float(t), "n_vertices": s.n_vertices, "nu_hat": gh.nu_hat, "I_len": gh.I_len,
                    "area": ab.area, "area_over_I_nu": ab.area / (gh.I_len * gh.nu_hat), "min_density": dens})
        sys.stdout.flush()


if __name__ == "__main__":
    main()
