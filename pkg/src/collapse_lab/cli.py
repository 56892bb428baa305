"""``collapse-lab`` command line."""

from __future__ import annotations

import argparse
import json
import sys

from . import mesh
from .experiments import (ConfigError, default_config, list_experiments, load_config, run,
                          write_outputs)
from .families import FamilySpec


def _run(args) -> int:
    try:
        cfg = load_config(args.config, args.experiment) if args.config else default_config(args.experiment)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = args.out or cfg.out or f"runs/{cfg.experiment}"
    report, rows = run(cfg)
    write_outputs(report, rows, out)
    for name, ok in report["summary"].items():
        if name != "passed":
            print(f"{'PASS' if ok else 'FAIL'}  {name}")
    print(f"report written to {out}/report.json")
    return 0 if report["summary"]["passed"] else 1


def _list(args) -> int:
    for name, desc in list_experiments():
        print(f"{name:<26}{desc}")
    return 0


def _mesh_dump(args) -> int:
    spec = FamilySpec(args.family, json.loads(args.params), args.n, args.m, args.k)
    mesh.dump(spec.build(), args.path)
    print(f"wrote {args.path}")
    return 0


def _mesh_load(args) -> int:
    try:
        s = mesh.load(args.path, allow_boundary=True)
    except (mesh.MeshError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    info = {"vertices": s.n_vertices, "faces": len(s.faces), "edges": len(s.edges), "chi": s.chi,
            "orientable": s.orientable, "closed": s.is_closed, "area": s.area()}
    print(json.dumps(info, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="collapse-lab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a named experiment")
    r.add_argument("experiment", choices=[n for n, _ in list_experiments()])
    r.add_argument("--config", help="YAML config file (defaults built in)")
    r.add_argument("--out", help="output directory for report.json and summary.csv")
    r.set_defaults(func=_run)

    ls = sub.add_parser("list", help="list experiments")
    ls.set_defaults(func=_list)

    m = sub.add_parser("mesh", help="mesh text format tools")
    msub = m.add_subparsers(dest="mesh_command", required=True)
    d = msub.add_parser("dump", help="generate a family member and write it")
    d.add_argument("path")
    d.add_argument("--family", default="flat_torus")
    d.add_argument("--params", default='{"a": 1.0, "b": 1.0}', help="JSON object of generator params")
    d.add_argument("--n", type=int, default=16)
    d.add_argument("--m", type=int, default=16)
    d.add_argument("--k", type=int, default=1)
    d.set_defaults(func=_mesh_dump)
    lo = msub.add_parser("load", help="validate a mesh file and print its invariants")
    lo.add_argument("path")
    lo.set_defaults(func=_mesh_load)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
