import json
import subprocess
import sys
from pathlib import Path

import pytest
import yaml

from feedforge.cli import main
from feedforge.config import DEFAULTS, config_from_dict, load_config
from feedforge.errors import ConfigError
from feedforge.fixtures import BUNDLED, bundled_path
from feedforge.geograph import candidate_from_dict
from feedforge.pipeline import STAGES, _activity_from, select_terminals

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def small_cfg(tmp_path, **over):
    doc = yaml.safe_load((CONFIGS / "small10.yaml").read_text())
    for dotted, value in over.items():
        node = doc
        keys = dotted.split(".")
        for k in keys[:-1]:
            node = node.setdefault(k, {})
        node[keys[-1]] = value
    path = tmp_path / "cfg.yaml"
    path.write_text(yaml.safe_dump(doc))
    return path


def artifact_bytes(d):
    return {p.name: p.read_bytes() for p in sorted(Path(d).iterdir()) if p.name != "manifest.json"}


# -- config -------------------------------------------------------------------

def test_defaults_round_trip():
    cfg = config_from_dict({"input": {"path": "x.osm"}})
    assert cfg.raw["synthesis"]["timeout_s"] == 120.0
    assert cfg.scenarios == {"sanity": 0.25, "representative": 1.0, "stressed": 1.5}
    assert cfg.load_config.total_p_mw == 1.44
    assert set(DEFAULTS) == {"seed", "input", "scoring", "synthesis", "electrify", "powerflow", "output"}


@pytest.mark.parametrize("doc", [
    {"input": {"path": "x", "colour": 1}},
    {"input": {"path": "x"}, "synthesis": {"solver": "magic"}},
    {"input": {"path": "x"}, "electrify": {"power_factor": 1.5}},
    {"input": {"path": "x"}, "powerflow": {"scenarios": {"extreme": 2.0}}},
    {"input": {"path": "x"}, "scoring": {"lambda_d": 0, "lambda_c": 0, "lambda_b": 0}},
    {"input": {"path": "x"}, "synthesis": {"required": {"top_k": -1}}},
    {"input": {}},
])
def test_invalid_configs(doc):
    with pytest.raises(ConfigError):
        config_from_dict(doc)


def test_package_paths_resolve():
    cfg = load_config(CONFIGS / "desk15.yaml")
    assert cfg.resolve(cfg.raw["input"]["path"]) == bundled_path("grid15.osm")
    assert cfg.resolve("rel/file.osm") == CONFIGS / "rel" / "file.osm"


def test_bundled_fixtures_regenerate_identically():
    for name, make in BUNDLED.items():
        assert bundled_path(name).read_text() == make(), name


# -- end to end on the small fixture ------------------------------------------

def test_small_run_emits_all_artifacts(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", str(small_cfg(tmp_path)), "--out", str(out)]) == 0
    names = {p.name for p in out.iterdir()}
    assert {"summary.json", "summary.txt", "feeder.dss", "feeder.geojson", "overlay.svg",
            "voltage_profile.svg", "network.json", "manifest.json"} <= names
    text = capsys.readouterr().out
    assert "Number of buses" in text and "stressed" in text
    summary = json.loads((out / "summary.json").read_text())
    assert summary["n_branches"] == summary["n_buses"] - 1
    assert summary["total_households"] == 30


def test_stage_chain_equals_run(tmp_path):
    cfg = small_cfg(tmp_path)
    whole = tmp_path / "whole"
    assert main(["run", "--config", str(cfg), "--out", str(whole)]) == 0
    prev = None
    for k, stage in enumerate(STAGES):
        out = tmp_path / f"s{k}"
        argv = [stage, "--config", str(cfg), "--out", str(out)]
        if prev is not None:
            argv += ["--in", str(prev)]
        assert main(argv) == 0, stage
        prev = out
    assert artifact_bytes(prev) == artifact_bytes(whole)


def test_synth_twice_is_identical(tmp_path):
    cfg = small_cfg(tmp_path)
    ing = tmp_path / "ing"
    assert main(["ingest", "--config", str(cfg), "--out", str(ing)]) == 0
    for name in ("a", "b"):
        assert main(["synth", "--config", str(cfg), "--in", str(ing), "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a" / "feeder.json").read_bytes() == (tmp_path / "b" / "feeder.json").read_bytes()


def test_exact_not_worse_than_heuristic(tmp_path):
    objs = {}
    for solver in ("exact", "heuristic"):
        out = tmp_path / solver
        assert main(["run", "--config", str(small_cfg(tmp_path, **{"synthesis.solver": solver})),
                     "--out", str(out)]) == 0
        objs[solver] = json.loads((out / "solution.json").read_text())["objective"]
    assert objs["exact"] <= objs["heuristic"]


def test_pf_tolerance_order(tmp_path):
    volts = {}
    for tol in (1e-4, 1e-8):
        out = tmp_path / str(tol)
        assert main(["run", "--config", str(small_cfg(tmp_path, **{"powerflow.tol": tol})), "--out", str(out)]) == 0
        doc = json.loads((out / "powerflow.json").read_text())
        volts[tol] = {b["id"]: b["v_pu"] for b in doc["stressed"]["buses"]}
    assert max(abs(volts[1e-4][b] - volts[1e-8][b]) for b in volts[1e-8]) <= 1e-4


def test_terminal_selection(tmp_path):
    path = small_cfg(tmp_path)
    out = tmp_path / "ing"
    assert main(["ingest", "--config", str(path), "--out", str(out)]) == 0
    doc = json.loads((out / "candidate.json").read_text())
    cfg = load_config(path)
    cand = candidate_from_dict(doc["graph"])
    source, req = select_terminals(cfg, cand, _activity_from(doc))
    assert source in cand.nodes and len(req) == 4 and req <= set(cand.nodes)


# -- exit codes ---------------------------------------------------------------

def test_exit_config_error(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("input: {path: x.osm}\nbogus: 1\n")
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "bogus" in capsys.readouterr().err


def test_exit_missing_config(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.yaml")]) == 2


def test_exit_data_error(tmp_path, capsys):
    osm = tmp_path / "broken.osm"
    osm.write_text("<osm>\n<node id='1' lon='0' lat='0'>\n</osm>\n")
    cfg = small_cfg(tmp_path, **{"input.path": str(osm)})
    out = tmp_path / "o"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 3
    err = capsys.readouterr().err
    assert "stage ingest" in err and "ParseError" in err
    assert not out.exists() or not any(out.iterdir())


def test_exit_timeout_keeps_incumbent(tmp_path):
    out = tmp_path / "o"
    cfg = small_cfg(tmp_path, **{"synthesis.timeout_s": 1e-9})
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 4
    sol = json.loads((out / "solution.json").read_text())
    assert sol["proven_optimal"] is False and sol["gap"] >= 0
    assert (out / "summary.json").exists()


def test_exit_nonconvergence_removes_partials(tmp_path):
    out = tmp_path / "o"
    cfg = small_cfg(tmp_path, **{"powerflow.max_iter": 1})
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 5
    assert not any(out.iterdir())


def test_console_script(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "feedforge.cli", "run", "--config", str(small_cfg(tmp_path)),
                           "--out", str(tmp_path / "o"), "--verbose"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "stage synth" in proc.stderr
