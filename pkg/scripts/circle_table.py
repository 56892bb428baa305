"""Minimal nu for the circle against the segment over a range of sample
counts; CSV to stdout (columns as in the experiment's summary.csv)."""

import argparse
import csv
import math
import sys

from collapse_lab.metric_lab import CSV_COLUMNS, SearchBudgetExceeded, circle_segment_min_nu


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--L", type=float, default=2 * math.pi)
    ap.add_argument("--I", dest="I_len", type=float, default=None, help="segment length (default L)")
    ap.add_argument("--m", type=int, default=16)
    ap.add_argument("--n", type=int, nargs="+", default=[2, 4, 6, 8, 10, 12])
    ap.add_argument("--max-nodes", type=int, default=2_000_000)
    args = ap.parse_args()
    I_len = args.I_len if args.I_len is not None else args.L
    w = csv.DictWriter(sys.stdout, fieldnames=list(CSV_COLUMNS) + ["complete"])
    w.writeheader()
    for n in args.n:
        try:
            res = circle_segment_min_nu(args.L, n, args.m, I_len, max_nodes=args.max_nodes)
        except SearchBudgetExceeded as exc:
            res = exc.partial
        w.writerow({**res.row(), "complete": res.complete})
        sys.stdout.flush()


if __name__ == "__main__":
    main()
