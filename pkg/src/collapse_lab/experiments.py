"""Named experiments, their configuration, and report assembly."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path as FsPath

import yaml

from . import __version__
from .curvature import gauss_bonnet_region, min_curvature_density, noncollapse_witness, total_curvature
from .families import FamilySpec, fold_step_ratio
from .homology import (all_classes, intersection_points, is_strongly_isometric, shortest_basis,
                       shortest_loop_in_class, z2_intersection)
from .metric_lab import (CSV_COLUMNS, SearchBudgetExceeded, area_bound_check, circle_segment_min_nu,
                         gh_segment_upper_bound, min_loop_distance)
from .surgery import ConvexityProxyFailed, cut_along, separating_loop, split_along_loop


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Tolerances:
    strong_isometry: float | None = None  # None: one mesh step
    gb_residual_per_vertex: float = 1e-8
    length_rel: float = 0.03

    def __post_init__(self):
        for name in ("gb_residual_per_vertex", "length_rel"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"tolerance {name} must be positive")
        if self.strong_isometry is not None and self.strong_isometry <= 0:
            raise ConfigError("tolerance strong_isometry must be positive")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    families: tuple[FamilySpec, ...] = ()
    tolerances: Tolerances = field(default_factory=Tolerances)
    params: dict = field(default_factory=dict)
    seed: int = 0
    out: str | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["families"] = [asdict(f) for f in self.families]
        d.pop("out")
        return d

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def config_from_dict(raw: dict, experiment: str | None = None) -> ExperimentConfig:
    raw = dict(raw or {})
    name = experiment or raw.get("experiment")
    if raw.get("experiment") not in (None, name):
        raise ConfigError(f"config is for {raw['experiment']!r}, not {name!r}")
    if name is None:
        raise ConfigError("no experiment named")
    unknown = set(raw) - {"experiment", "families", "tolerances", "params", "seed", "out"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    defaults = DEFAULTS.get(name, {})
    try:
        fams = tuple(FamilySpec(**f) for f in raw.get("families", defaults.get("families", [])))
        tol = Tolerances(**raw.get("tolerances", {}))
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    params = {**defaults.get("params", {}), **(raw.get("params") or {})}
    return ExperimentConfig(name, fams, tol, params, int(raw.get("seed", 0)), raw.get("out"))


def load_config(path, experiment: str | None = None) -> ExperimentConfig:
    with open(path) as fh:
        try:
            raw = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if raw is not None and not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    return config_from_dict(raw, experiment)


# --------------------------------------------------------------------------
# per-instance measurements


def _basis_audit(spec: FamilySpec, tol: Tolerances) -> dict:
    s = spec.build()
    basis = shortest_basis(s)
    step = s.max_edge_length()
    limit = tol.strong_isometry if tol.strong_isometry is not None else step
    viols = [is_strongly_isometric(s, lp)[1] for lp in basis.loops]
    rec = {
        "n_vertices": s.n_vertices,
        "mesh_step": step,
        "lengths": list(basis.lengths),
        "classes": [c.bits for c in basis.classes],
        "violations": viols,
        "violation_limit": limit,
        "strongly_isometric": all(v <= limit for v in viols),
    }
    return rec


def _basis_isometry(spec, cfg):
    rec = _basis_audit(spec, cfg.tolerances)
    expected = flat_model_lengths(spec)
    if expected is not None:
        rec["expected_lengths"] = expected
        rec["lengths_ok"] = all(abs(a - b) <= cfg.tolerances.length_rel * b
                                for a, b in zip(rec["lengths"], expected))
    return rec


def flat_model_lengths(spec: FamilySpec):
    """Flat-model systoles for families where they are known in closed form."""
    p = spec.params
    if spec.family == "flat_torus":
        return sorted([float(p["a"]), float(p["b"])])
    if spec.family == "flat_klein":
        return [float(p["eps"]), float(p["eps"])]
    return None


def _basis_crossings(spec, cfg):
    s = spec.build()
    basis = shortest_basis(s)
    a, b = basis.loops[0], basis.loops[1]
    pts = sorted(intersection_points(s, a, b))
    shared = sorted(set(a.vertices) & set(b.vertices))
    return {"n_vertices": s.n_vertices, "lengths": list(basis.lengths), "crossings": pts,
            "shared_vertices": len(shared), "single_crossing": len(pts) == 1 and len(shared) == 1}


def _theta(rep, bp):
    others = [t for v, t in rep.turning.items() if v != bp]
    return abs(sum(others)), max((abs(t) for t in others), default=0.0)


def _pipeline(s, cfg) -> tuple[dict, object]:
    basis = shortest_basis(s)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvexityProxyFailed)
        sep = separating_loop(s, basis)
    a, b = basis.loops[0], basis.loops[1]
    (bp,) = sep.M.copies_of(sep.p)
    rep = gauss_bonnet_region(sep.M, bp)
    disk_rep = gauss_bonnet_region(sep.disk_part)
    theta, theta_max = _theta(rep, bp)
    walk = s.path_length(sep.sigma.closed_sequence())
    V = s.n_vertices
    cap = cfg.tolerances.gb_residual_per_vertex
    rec = {
        "n_vertices": V,
        "alpha": a.length,
        "beta": b.length,
        "sigma": sep.sigma.length,
        "sigma_walk": walk,
        "sigma_exact": sep.sigma.length == 2.0 * a.length + 2.0 * b.length
        and abs(walk - sep.sigma.length) <= 1e-12 * walk,
        "lambda": sep.loop.length,
        "lambda_le_sigma": sep.loop.length <= sep.sigma.length,
        "lambda_simple": sep.loop.simple,
        "dist_pq": sep.dist_pq,
        "chi_disk": sep.disk_part.chi,
        "chi_M": sep.M.chi,
        "chis_ok": (sep.disk_part.chi, sep.M.chi) == (1, -1),
        "touches_cut_boundary": sep.touches_boundary,
        "convexity_warnings": len(caught),
        "M": rep.to_dict(),
        "disk_residual": disk_rep.residual,
        "theta": theta,
        "theta_max_vertex": theta_max,
        "interior_le_bound": rep.interior_sum <= -math.pi + theta,
        "basepoint_turning_le_pi": abs(rep.basepoint_turning) <= math.pi,
        "gb_ok": max(abs(rep.residual), abs(disk_rep.residual)) < cap * V,
    }
    return rec, (sep, bp)


def _fold_step(spec):
    p = spec.params
    if spec.family == "folded_torus":
        return float(p["r"]) * (1.0 - float(p["t"]))
    if spec.family == "finger_torus":
        return float(p["r"])
    return None


def _separating(spec, cfg):
    s = spec.build()
    rec = _pipeline(s, cfg)[0]
    r = _fold_step(spec)
    if r is not None and spec.k == 1:
        rec["fold_step_over_r"] = fold_step_ratio(s, r)
    return rec


def _gauss_bonnet(spec, cfg):
    s = spec.build()
    V = s.n_vertices
    cap = cfg.tolerances.gb_residual_per_vertex * V
    t0 = time.perf_counter()
    closed = total_curvature(s) - 2 * math.pi * s.chi
    gb_time = time.perf_counter() - t0
    regions = []
    if cfg.params.get("cut_regions", True):
        basis = shortest_basis(s)
        for i, lp in enumerate(basis.loops):
            for j, r in enumerate(split_along_loop(s, lp)):
                regions.append((f"split{i}.{j}", r))
        if len(basis) >= 2 and s.orientable and len(set(basis[0].vertices) & set(basis[1].vertices)) == 1:
            regions.append(("disk", cut_along(s, basis[0], basis[1]).region))
    res = {}
    t0 = time.perf_counter()
    for name, r in regions:
        rep = gauss_bonnet_region(r)
        res[name] = {"chi": r.chi, "interior": rep.interior_sum, "turning": rep.turning_sum,
                     "residual": rep.residual}
    gb_time += time.perf_counter() - t0
    worst = max([abs(closed)] + [abs(v["residual"]) for v in res.values()])
    return {"n_vertices": V, "chi": s.chi, "closed_residual": closed, "regions": res,
            "max_residual": worst, "cap": cap, "ok": worst < cap,
            "_timing": {"gb_s": gb_time}}


def _noncollapse(spec, cfg):
    s = spec.build()
    D = s.all_distances()
    gh = gh_segment_upper_bound(s, D)
    C = float(cfg.params.get("C", 4.0))
    ab = area_bound_check(s, gh.nu_hat, gh.I_len, C, gh.f)
    dens, dv = min_curvature_density(s)
    rec = {"n_vertices": s.n_vertices, "gh": gh.to_dict(), "area_check": ab.to_dict(),
           "area_ok": ab.slack >= 0, "min_density": dens, "min_density_vertex": dv}
    r = _fold_step(spec)
    if r is not None and spec.k == 1:
        rec["fold_step_over_r"] = fold_step_ratio(s, r)
    try:
        pipe, (sep, bp) = _pipeline(s, cfg)
        verdict = noncollapse_witness(s, gh.nu_hat, gh.I_len, sep.M, bp)
        rec["pipeline"] = pipe
    except Exception as exc:  # pipeline failure is an inconclusive verdict, not a crash
        verdict = noncollapse_witness(s, gh.nu_hat, gh.I_len, None)
        rec["pipeline_error"] = f"{type(exc).__name__}: {exc}"
    rec["witness"] = verdict.to_dict()
    return rec


def _klein(spec, cfg):
    s = spec.build()
    basis = shortest_basis(s)
    a, b = basis.loops[0], basis.loops[1]
    eps = float(spec.params["eps"])
    dist = min_loop_distance(s, a, b)
    c = basis.classes[0] + basis.classes[1]
    gamma = shortest_loop_in_class(s, c)
    char = {x.bits: z2_intersection(s, c, x) == z2_intersection(s, x, x) for x in all_classes(s)}
    gh = gh_segment_upper_bound(s)
    crosses = sorted(intersection_points(s, gamma, a)) if gamma.simple else []
    rel = cfg.tolerances.length_rel
    return {
        "n_vertices": s.n_vertices,
        "eps": eps,
        "lengths": list(basis.lengths),
        "lengths_ok": all(abs(x - eps) <= rel * eps for x in basis.lengths),
        "disjoint": not (set(a.vertices) & set(b.vertices)),
        "loop_distance": dist,
        "gamma_length": gamma.length,
        "gamma_crosses_alpha": crosses,
        "characteristic": {str(k): v for k, v in sorted(char.items())},
        "characteristic_ok": all(char.values()) and len(char) == 4,
        "nu_hat": gh.nu_hat,
        "I_len": gh.I_len,
    }


# --------------------------------------------------------------------------
# summaries


def _ok(records, key):
    return bool(records) and all(r.get(key) is True for r in records)


def _strictly_decreasing(xs):
    return len(xs) >= 2 and all(b < a for a, b in zip(xs, xs[1:]))


def _sum_basis_isometry(records, cfg):
    out = {"strongly_isometric": _ok(records, "strongly_isometric")}
    if any("lengths_ok" in r for r in records):
        out["lengths_match_flat_model"] = all(r.get("lengths_ok", True) for r in records)
    return out


def _sum_basis_crossings(records, cfg):
    return {"single_crossing": _ok(records, "single_crossing")}


def _sum_separating(records, cfg):
    out = {k: _ok(records, k) for k in ("sigma_exact", "lambda_le_sigma", "lambda_simple", "chis_ok",
                                          "interior_le_bound", "basepoint_turning_le_pi", "gb_ok")}
    thetas = [r["theta"] for r in records if "theta" in r]
    if len(thetas) >= 2:
        out["theta_decreasing"] = len(thetas) == len(records) and _strictly_decreasing(thetas)
    return out


def _sum_gb(records, cfg):
    return {"residual_below_cap": _ok(records, "ok")}


def _sum_noncollapse(records, cfg):
    good = [r for r in records if "error" not in r]
    nus = [r["gh"]["nu_hat"] for r in good]
    dens = [r["min_density"] for r in good]
    verdicts = [r["witness"]["verdict"] == "K-bound-violated" for r in good]
    # once violated, larger-nu members may not follow with an inconclusive verdict
    by_nu = [v for _, v in sorted(zip(nus, verdicts), key=lambda t: -t[0])]
    first = by_nu.index(True) if True in by_nu else len(by_nu)
    return {
        "all_members_ran": len(good) == len(records) and bool(records),
        "nu_strictly_decreasing": _strictly_decreasing(nus),
        "area_bound": _ok(good, "area_ok"),
        "density_strictly_decreasing": _strictly_decreasing(dens),
        "density_below_minus_one_at_last": bool(dens) and dens[-1] < -1.0,
        "verdict_monotone": all(by_nu[first:]),
    }


def _sum_klein(records, cfg):
    thr = float(cfg.params.get("min_distance", 0.95))
    return {
        "lengths_match_eps": _ok(records, "lengths_ok"),
        "disjoint": _ok(records, "disjoint"),
        "distance_bound": bool(records) and all(r.get("loop_distance", -1) >= thr for r in records),
        "gamma_crosses_alpha": bool(records) and all(r.get("gamma_crosses_alpha") for r in records),
        "characteristic": _ok(records, "characteristic_ok"),
    }


# --------------------------------------------------------------------------
# the circle search is not a per-surface experiment


def _circle_search(cfg):
    p = cfg.params
    L = float(p.get("L", 2 * math.pi))
    I_len = float(p.get("I_len", L))
    m = int(p.get("m", 16))
    ns = [int(x) for x in p.get("n", [8, 12])]
    cap = int(p.get("max_nodes", 2_000_000))
    scale = float(p.get("scale", 2.0))
    jobs = [(L, n, m, I_len) for n in ns]
    if p.get("check_scaling", True):
        jobs.append((scale * L, ns[0], m, scale * I_len))
    records, rows, timing = [], [], {}
    for Lx, n, mx, Ix in jobs:
        key = f"L={Lx!r},n={n},m={mx},I={Ix!r}"
        try:
            res = circle_segment_min_nu(Lx, n, mx, Ix, max_nodes=cap)
            complete = True
        except SearchBudgetExceeded as exc:
            res, complete = exc.partial, False
        records.append({"key": key, "L": Lx, "n": n, "m": mx, "I_len": Ix, "nu_min": res.nu_min,
                        "assignment": list(res.assignment), "assignments_tested": res.assignments_tested,
                        "nodes": res.nodes, "complete": complete})
        rows.append(res.row())
        timing[key] = res.wall_time_s
    base = [r for r in records if r["L"] == L]
    nus = [r["nu_min"] for r in base]
    summary = {
        "complete": all(r["complete"] for r in records),
        "nu_above_L_over_16": bool(base) and base[0]["nu_min"] > L / 16,
        "nondecreasing_in_n": all(b >= a for a, b in zip(nus, nus[1:])),
    }
    if "min_nu_at_largest_n" in p:
        summary["large_n_floor"] = bool(nus) and nus[-1] >= float(p["min_nu_at_largest_n"])
    if p.get("check_scaling", True):
        scaled = records[-1]["nu_min"]
        summary["linear_scaling"] = abs(scaled - scale * base[0]["nu_min"]) <= 1e-9 * max(1.0, scaled)
    records.sort(key=lambda r: r["key"])
    return records, summary, timing, rows


# --------------------------------------------------------------------------
# registry


@dataclass(frozen=True)
class Experiment:
    name: str
    description: str
    instance: object | None
    summarize: object | None


EXPERIMENTS: dict[str, Experiment] = {}


def _register(name, description, instance=None, summarize=None):
    EXPERIMENTS[name] = Experiment(name, description, instance, summarize)


_register("lemma11-audit", "shortest homology basis and strong-isometry check of its loops", _basis_isometry,
          _sum_basis_isometry)
_register("cor12-audit", "transverse crossings between the two shortest torus basis loops", _basis_crossings,
          _sum_basis_crossings)
_register("lemma31-pipeline", "separating loop construction on the folded torus and curvature of M",
          _separating, _sum_separating)
_register("gauss-bonnet-audit", "discrete Gauss-Bonnet residuals on surfaces and cut regions",
          _gauss_bonnet, _sum_gb)
_register("circle-segment-search", "minimal nu for a strongly isometric circle near a segment")
_register("torus-noncollapse-sweep", "GH bound, area bound and curvature witness along the folded torus",
          _noncollapse, _sum_noncollapse)
_register("klein-collapse-sweep", "disjoint short loops and their distance on thin flat Klein bottles",
          _klein, _sum_klein)


def list_experiments() -> list[tuple[str, str]]:
    return [(e.name, e.description) for e in EXPERIMENTS.values()]


def _fam(family, n, m, k=1, **params):
    return {"family": family, "params": params, "n": n, "m": m, "k": k}


DEFAULTS: dict[str, dict] = {
    "lemma11-audit": {"families": [_fam("flat_torus", 32, 32, 2, a=1.0, b=2.0)]},
    "cor12-audit": {"families": [_fam("flat_torus", 32, 32, 2, a=1.0, b=2.0),
                                 _fam("folded_torus", 32, 40, t=0.9, r=0.05)]},
    "lemma31-pipeline": {"families": [_fam("folded_torus", 32, 40, t=0.9, r=0.05),
                                      _fam("folded_torus", 64, 40, t=0.9, r=0.05)]},
    "gauss-bonnet-audit": {"families": [_fam("flat_torus", 16, 16, a=1.0, b=2.0),
                                        _fam("flat_klein", 40, 4, eps=0.1),
                                        _fam("folded_torus", 32, 40, t=0.9, r=0.05)]},
    "circle-segment-search": {"params": {"L": 2 * math.pi, "I_len": 2 * math.pi, "m": 16, "n": [8, 12],
                                         "min_nu_at_largest_n": 0.7}},
    "torus-noncollapse-sweep": {"families": [_fam("folded_torus", 32, 40, t=t, r=0.05)
                                             for t in (0.5, 0.7, 0.85, 0.95)]},
    "klein-collapse-sweep": {"families": [_fam("flat_klein", 40, 4, eps=e) for e in (0.2, 0.1, 0.05)]},
}


def default_config(name: str) -> ExperimentConfig:
    return config_from_dict({}, name)


def run(cfg: ExperimentConfig) -> tuple[dict, list[dict]]:
    """Run an experiment.  Returns the report and the flat CSV rows.

    Each family instance runs in isolation: an exception becomes an
    ``error`` entry in its record and the sweep continues.  Records are
    sorted by instance key; wall times live under ``timing`` only, so the
    rest of the report is reproducible bit for bit.
    """
    exp = EXPERIMENTS[cfg.experiment]
    timing: dict = {}
    if exp.instance is None:
        records, summary, timing, rows = _circle_search(cfg)
    else:
        records = []
        for spec in cfg.families:
            key = spec.key()
            t0 = time.perf_counter()
            try:
                rec = exp.instance(spec, cfg)
            except Exception as exc:  # isolate one bad instance from the sweep
                rec = {"error": f"{type(exc).__name__}: {exc}"}
            extra = rec.pop("_timing", {})
            timing[key] = {"wall_s": time.perf_counter() - t0, **extra}
            records.append({"key": key, "family": spec.family, "params": dict(spec.params),
                            "n": spec.n, "m": spec.m, "k": spec.k, **rec})
        summary = exp.summarize(records, cfg)
        records.sort(key=lambda r: r["key"])
        rows = [_flat_row(r) for r in records]
    report = {
        "experiment": cfg.experiment,
        "records": records,
        "summary": {**summary, "passed": all(summary.values())},
        "provenance": {"config_hash": cfg.digest(), "version": __version__, "seed": cfg.seed,
                       "config": cfg.to_dict()},
        "timing": timing,
    }
    return _jsonable(report), rows


def report_body(report: dict) -> dict:
    """Report without wall-clock fields."""
    return {k: v for k, v in report.items() if k != "timing"}


def _flat_row(rec: dict, prefix: str = "") -> dict:
    row = {}
    for k, v in rec.items():
        name = f"{prefix}{k}"
        if isinstance(v, dict):
            row.update(_flat_row(v, name + "."))
        elif isinstance(v, (list, tuple)):
            row[name] = ";".join(str(x) for x in v)
        else:
            row[name] = v
    return row


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "item") and not isinstance(x, (str, bytes)):
        return x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return x


def write_outputs(report: dict, rows: list[dict], out_dir) -> None:
    out = FsPath(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    cols: list[str] = []
    if report["experiment"] == "circle-segment-search":
        cols = list(CSV_COLUMNS)
    else:
        for r in rows:
            cols += [c for c in r if c not in cols]
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow(r)
