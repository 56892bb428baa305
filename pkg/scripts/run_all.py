"""Run every registered experiment from configs/ and write runs/<name>/."""

import argparse
import sys
from pathlib import Path

from collapse_lab.experiments import list_experiments, load_config, run, write_outputs

ROOT = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(ROOT / "runs"))
    ap.add_argument("names", nargs="*", help="subset of experiments (default: all)")
    args = ap.parse_args()
    names = args.names or [n for n, _ in list_experiments()]
    failed = 0
    for name in names:
        cfg = load_config(ROOT / "configs" / f"{name}.yaml")
        report, rows = run(cfg)
        write_outputs(report, rows, Path(args.out) / name)
        ok = report["summary"]["passed"]
        failed += not ok
        bad = [k for k, v in report["summary"].items() if not v and k != "passed"]
        print(f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({', '.join(bad)})" if bad else ""), flush=True)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
