import csv
import json

import pytest

from collapse_lab import cli, mesh
from collapse_lab.experiments import (EXPERIMENTS, ConfigError, config_from_dict, default_config, list_experiments,
                                      load_config, report_body, run, write_outputs)

NAMES = ["lemma11-audit", "cor12-audit", "lemma31-pipeline", "gauss-bonnet-audit", "circle-segment-search",
         "torus-noncollapse-sweep", "klein-collapse-sweep"]

SMALL = {
    "lemma11-audit": {"families": [{"family": "flat_torus", "params": {"a": 1.0, "b": 2.0}, "n": 8, "m": 8}]},
    "gauss-bonnet-audit": {"families": [{"family": "flat_torus", "params": {"a": 1.0, "b": 2.0}, "n": 6, "m": 6},
                                        {"family": "flat_klein", "params": {"eps": 0.3}, "n": 8, "m": 4}]},
    "circle-segment-search": {"params": {"L": 2.0, "I_len": 2.0, "m": 5, "n": [4, 6], "min_nu_at_largest_n": 0.0}},
    "klein-collapse-sweep": {"families": [{"family": "flat_klein", "params": {"eps": e}, "n": 20, "m": 4}
                                          for e in (0.2, 0.1)]},
}


def test_registry_is_stable():
    assert [n for n, _ in list_experiments()] == NAMES
    assert all(desc for _, desc in list_experiments())
    for name in NAMES:
        assert default_config(name).experiment == name


@pytest.mark.parametrize("raw,msg", [
    ({"experiment": "nope"}, "unknown experiment"),
    ({"experiment": "lemma11-audit", "bogus": 1}, "unknown config keys"),
    ({"experiment": "lemma11-audit", "families": [{"family": "nope"}]}, "unknown family"),
    ({"experiment": "lemma11-audit", "families": [{"family": "flat_torus", "colour": 1}]}, "colour"),
    ({"experiment": "lemma11-audit", "tolerances": {"length_rel": -1}}, "positive"),
    ({}, "no experiment"),
])
def test_config_errors(raw, msg):
    with pytest.raises(ConfigError, match=msg):
        config_from_dict(raw)


def test_config_experiment_mismatch():
    with pytest.raises(ConfigError):
        config_from_dict({"experiment": "cor12-audit"}, "lemma11-audit")


def test_yaml_config(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("experiment: lemma11-audit\nfamilies:\n  - family: flat_torus\n    params: {a: 1.0, b: 2.0}\n"
                 "    n: 8\n    m: 8\ntolerances:\n  length_rel: 0.05\nseed: 3\n")
    cfg = load_config(p)
    assert cfg.families[0].n == 8 and cfg.tolerances.length_rel == 0.05 and cfg.seed == 3
    bad = tmp_path / "bad.yaml"
    bad.write_text("experiment: [unclosed\n")
    with pytest.raises(ConfigError):
        load_config(bad)
    lst = tmp_path / "list.yaml"
    lst.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_config(lst)


def test_digest_tracks_content():
    a = config_from_dict(SMALL["lemma11-audit"], "lemma11-audit")
    b = config_from_dict(SMALL["lemma11-audit"], "lemma11-audit")
    c = config_from_dict({**SMALL["lemma11-audit"], "seed": 1}, "lemma11-audit")
    assert a.digest() == b.digest() != c.digest()
    assert a.digest() != default_config("lemma11-audit").digest()


@pytest.mark.parametrize("name", sorted(SMALL))
def test_small_runs_are_deterministic(name):
    cfg = config_from_dict(SMALL[name], name)
    r1, rows1 = run(cfg)
    r2, rows2 = run(cfg)
    assert json.dumps(report_body(r1), sort_keys=True) == json.dumps(report_body(r2), sort_keys=True)
    assert r1["summary"]["passed"] is True, r1["summary"]
    assert r1["provenance"]["config_hash"] == cfg.digest()
    assert "timing" in r1 and "timing" not in report_body(r1)
    keys = [r["key"] for r in r1["records"]]
    assert keys == sorted(keys)


def test_instance_errors_are_isolated():
    raw = {"families": [{"family": "flat_torus", "params": {"a": 1.0, "b": 1.0}, "n": 6, "m": 6},
                        {"family": "flat_torus", "params": {"a": -1.0, "b": 1.0}, "n": 6, "m": 6}]}
    report, _ = run(config_from_dict(raw, "lemma11-audit"))
    errs = [r for r in report["records"] if "error" in r]
    assert len(errs) == 1 and "ValueError" in errs[0]["error"]
    assert report["summary"]["passed"] is False


def test_write_outputs(tmp_path):
    report, rows = run(config_from_dict(SMALL["circle-segment-search"], "circle-segment-search"))
    write_outputs(report, rows, tmp_path)
    data = json.loads((tmp_path / "report.json").read_text())
    assert data["experiment"] == "circle-segment-search"
    with open(tmp_path / "summary.csv") as fh:
        got = list(csv.DictReader(fh))
    assert list(got[0]) == ["L", "n", "m", "I_len", "nu_min", "assignments_tested", "wall_time_s"]
    assert len(got) == 3  # two sizes plus the scaled copy


def test_cli_list(capsys):
    assert cli.main(["list"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert [line.split()[0] for line in out] == NAMES


def test_cli_run(tmp_path, capsys):
    cfgp = tmp_path / "k.yaml"
    cfgp.write_text(json.dumps({"experiment": "klein-collapse-sweep", **SMALL["klein-collapse-sweep"]}))
    out = tmp_path / "out"
    assert cli.main(["run", "klein-collapse-sweep", "--config", str(cfgp), "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "PASS  distance_bound" in text
    assert (out / "report.json").exists() and (out / "summary.csv").exists()


def test_cli_run_failure_and_config_error(tmp_path, capsys):
    cfgp = tmp_path / "fail.yaml"
    # the short loops sit 1.0 apart, below the demanded 1.5
    cfgp.write_text("families:\n  - {family: flat_klein, params: {eps: 0.5}, n: 10, m: 4}\n"
                    "params: {min_distance: 1.5}\n")
    assert cli.main(["run", "klein-collapse-sweep", "--config", str(cfgp), "--out", str(tmp_path / "o")]) == 1
    bad = tmp_path / "bad.yaml"
    bad.write_text("bogus: 1\n")
    assert cli.main(["run", "klein-collapse-sweep", "--config", str(bad)]) == 2
    assert "error" in capsys.readouterr().err


def test_cli_mesh_roundtrip(tmp_path, capsys):
    path = tmp_path / "t.surf"
    assert cli.main(["mesh", "dump", str(path), "--family", "flat_klein", "--params", '{"eps": 0.2}',
                     "--n", "6", "--m", "4"]) == 0
    capsys.readouterr()
    assert cli.main(["mesh", "load", str(path)]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["chi"] == 0 and info["orientable"] is False and info["closed"] is True
    assert mesh.load(path).n_vertices == 24
    (tmp_path / "junk.surf").write_text("nothing here\n")
    assert cli.main(["mesh", "load", str(tmp_path / "junk.surf")]) == 2


def test_every_experiment_has_a_summary():
    for exp in EXPERIMENTS.values():
        assert exp.instance is None or exp.summarize is not None


def test_shipped_configs_match_defaults():
    from pathlib import Path

    root = Path(__file__).resolve().parent.parent / "configs"
    for name in NAMES:
        assert load_config(root / f"{name}.yaml").digest() == default_config(name).digest()
