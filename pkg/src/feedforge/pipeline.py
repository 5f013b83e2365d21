"""Stage-by-stage pipeline over JSON intermediates in one output directory.

Each stage reads the files produced by the previous one and writes its own,
so running the stages one at a time and running the whole pipeline produce
the same bytes.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .config import PipelineConfig
from .electrify import allocate_loads, assign_line_params, build_network, compute_weights
from .errors import ConfigError, ConvergenceError, DataError
from .export import (
    from_network_json,
    render_overlay_svg,
    render_voltage_profile_svg,
    sha256,
    to_geojson,
    to_network_json,
    to_opendss,
)
from .geograph import (
    GeoPoint,
    candidate_from_dict,
    candidate_to_dict,
    clean,
    geograph_from_dict,
    geograph_to_dict,
    nearest_node,
    parse_geojson,
    parse_osm_xml,
    project,
    project_points,
    score_edges,
    simplify,
)
from .metrics import structural_summary, summary_table, summary_to_json
from .powerflow import result_from_dict, result_to_dict, run_scenarios
from .synth import (
    SynthesisProblem,
    feeder_from_dict,
    feeder_to_dict,
    problem_to_dict,
    solution_to_dict,
    solve_exact,
    solve_heuristic,
    to_feeder_graph,
)

log = logging.getLogger(__name__)

STAGES = ("ingest", "synth", "electrify", "pf", "report")
STAGE_OUTPUTS = {
    "ingest": ("street.json", "candidate.json"),
    "synth": ("problem.json", "solution.json", "feeder.json"),
    "electrify": ("network.json",),
    "pf": ("powerflow.json",),
    "report": ("summary.json", "summary.txt", "feeder.dss", "feeder.geojson", "overlay.svg", "voltage_profile.svg"),
}


@dataclass
class StageOutcome:
    """What a stage wrote, and whether the solver hit its time budget."""

    written: list[Path] = field(default_factory=list)
    timed_out: bool = False
    text: str = ""


def _dump(path: Path, doc) -> Path:
    path.write_text(json.dumps(doc, indent=1, sort_keys=True, allow_nan=False) + "\n")
    return path


def _load(path: Path):
    try:
        return json.loads(path.read_text())
    except FileNotFoundError:
        raise DataError(f"missing intermediate {path.name} in {path.parent}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path} is not valid JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})") from None


def _read_input(cfg: PipelineConfig, key: str) -> bytes | None:
    path = cfg.resolve(cfg.raw["input"][key])
    if path is None:
        return None
    try:
        return path.read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read {key} file {path}: {exc.strerror}") from None


def _activity_points(raw: bytes) -> list[GeoPoint]:
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise DataError(f"activity layer is not valid JSON: {exc.msg}") from None
    pts = []
    for feat in doc.get("features", []):
        geom = (feat or {}).get("geometry") or {}
        if geom.get("type") == "Point":
            lon, lat = geom["coordinates"][:2]
            pts.append(GeoPoint(float(lon), float(lat)))
        elif geom.get("type") == "MultiPoint":
            pts += [GeoPoint(float(c[0]), float(c[1])) for c in geom["coordinates"]]
    return pts


# -- stages -------------------------------------------------------------------

def stage_ingest(cfg: PipelineConfig, src: Path, out: Path) -> StageOutcome:
    raw = _read_input(cfg, "path")
    inp = cfg.raw["input"]
    penalties = cfg.class_penalties
    if inp["format"] == "osm-xml":
        include = [c for c, p in penalties.items() if p is not None]
        graph = parse_osm_xml(raw, include=include, exclude=inp["exclude_classes"])
    else:
        graph = parse_geojson(raw, snap_tolerance_m=inp["snap_tolerance_m"])
    street = clean(project(graph))
    syn = cfg.raw["synthesis"]
    keep = set()
    if syn["source"] and "node" in syn["source"]:
        keep.add(str(syn["source"]["node"]))
    if "nodes" in syn["required"]:
        keep |= {str(n) for n in syn["required"]["nodes"]}
    cand = score_edges(simplify(street, keep=keep), cfg.scoring_weights, penalties)
    act_raw = _read_input(cfg, "activity")
    activity = None
    if act_raw is not None:
        activity = [[p.lon, p.lat, p.x, p.y] for p in project_points(_activity_points(act_raw), street.frame)]
    doc = {
        "source_digest": sha256(raw),
        "activity_digest": None if act_raw is None else sha256(act_raw),
        "graph": candidate_to_dict(cand),
        "activity": activity,
    }
    return StageOutcome([_dump(out / "street.json", geograph_to_dict(street)), _dump(out / "candidate.json", doc)])


def _activity_from(doc):
    if doc.get("activity") is None:
        return None
    return [GeoPoint(*v) for v in doc["activity"]]


def select_terminals(cfg: PipelineConfig, cand, activity):
    """Resolve the configured source and required nodes against the candidate graph."""
    syn = cfg.raw["synthesis"]
    src = syn["source"]
    if src is None:
        cx = math.fsum(p.x for p in cand.nodes.values()) / len(cand.nodes)
        cy = math.fsum(p.y for p in cand.nodes.values()) / len(cand.nodes)
        source = min(cand.nodes, key=lambda n: (math.hypot(cand.nodes[n].x - cx, cand.nodes[n].y - cy), n))
    elif "node" in src:
        source = str(src["node"])
        if source not in cand.nodes:
            raise ConfigError(f"synthesis.source node {source!r} is not in the candidate graph")
    else:
        source = nearest_node(cand, float(src["lon"]), float(src["lat"]))
    req = syn["required"]
    if "nodes" in req:
        required = {str(n) for n in req["nodes"]}
        missing = sorted(required - set(cand.nodes))
        if missing:
            raise ConfigError(f"synthesis.required nodes not in the candidate graph: {missing}")
    elif "coordinates" in req:
        required = {nearest_node(cand, float(lon), float(lat)) for lon, lat in req["coordinates"]}
    else:
        k = int(req["top_k"])
        if activity is None:
            raise ConfigError("synthesis.required.top_k needs an input.activity layer")
        r2 = cfg.raw["electrify"]["activity_radius_m"] ** 2
        counts = {n: sum(1 for a in activity if (a.x - p.x) ** 2 + (a.y - p.y) ** 2 <= r2)
                  for n, p in cand.nodes.items()}
        ranked = sorted((n for n in cand.nodes if counts[n] > 0), key=lambda n: (-counts[n], n))
        required = set(ranked[:k])
    return source, frozenset(required)


def stage_synth(cfg: PipelineConfig, src: Path, out: Path) -> StageOutcome:
    doc = _load(src / "candidate.json")
    cand = candidate_from_dict(doc["graph"])
    source, required = select_terminals(cfg, cand, _activity_from(doc))
    syn = cfg.raw["synthesis"]
    problem = SynthesisProblem(cand, source, required, syn["alpha_geo"], syn["alpha_top"], syn["alpha_elec"])
    if syn["solver"] == "exact":
        sol = solve_exact(problem, timeout=syn["timeout_s"])
    else:
        sol = solve_heuristic(problem)
    feeder = to_feeder_graph(problem, sol)
    timed_out = syn["solver"] == "exact" and not sol.proven_optimal
    if timed_out:
        log.warning("exact solver hit its %.0f s budget; keeping incumbent with gap %.4f", syn["timeout_s"], sol.gap)
    written = [
        _dump(out / "problem.json", problem_to_dict(problem)),
        _dump(out / "solution.json", solution_to_dict(sol, problem)),
        _dump(out / "feeder.json", feeder_to_dict(feeder)),
    ]
    return StageOutcome(written, timed_out)


def stage_electrify(cfg: PipelineConfig, src: Path, out: Path) -> StageOutcome:
    feeder = feeder_from_dict(_load(src / "feeder.json"))
    cand_doc = _load(src / "candidate.json")
    el = cfg.raw["electrify"]
    lcfg = cfg.load_config
    weights = compute_weights(feeder, lcfg, _activity_from(cand_doc))
    lines = assign_line_params(feeder, cfg.templates, el["class_map"])
    loads = allocate_loads(weights, lcfg, int(el["households"]))
    net = build_network(feeder, lines, loads, el["slack_v_pu"], el["base_mva"], el["base_kv"], lcfg.total_p_mw)
    path = out / "network.json"
    path.write_bytes(to_network_json(net, cand_doc.get("source_digest"), cfg.digest))
    return StageOutcome([path])


def stage_pf(cfg: PipelineConfig, src: Path, out: Path) -> StageOutcome:
    net = from_network_json((src / "network.json").read_bytes())
    pf = cfg.raw["powerflow"]
    results = run_scenarios(net, cfg.scenarios, pf["v_min"], pf["tol"], pf["max_iter"])
    bad = [name for name, (res, _) in results.items() if not res.converged]
    if bad:
        raise ConvergenceError(f"power flow did not converge for scenario(s) {', '.join(bad)} "
                               f"within {pf['max_iter']} iterations")
    doc = {name: result_to_dict(res, rep) for name, (res, rep) in results.items()}
    return StageOutcome([_dump(out / "powerflow.json", doc)])


def stage_report(cfg: PipelineConfig, src: Path, out: Path) -> StageOutcome:
    feeder = feeder_from_dict(_load(src / "feeder.json"))
    street = geograph_from_dict(_load(src / "street.json"))
    net = from_network_json((src / "network.json").read_bytes())
    pf_doc = _load(src / "powerflow.json")
    results = {name: result_from_dict(pf_doc[name])[0] for name in cfg.scenarios}
    summary = structural_summary(feeder, net)
    table = summary_table(summary)
    o = cfg.raw["output"]
    written = []

    def put(name, data):
        p = out / name
        p.write_bytes(data if isinstance(data, bytes) else data.encode())
        written.append(p)

    if o["summary"]:
        put("summary.json", summary_to_json(summary))
        put("summary.txt", table)
    if o["opendss"]:
        put("feeder.dss", to_opendss(net))
    if o["geojson"]:
        put("feeder.geojson", to_geojson(feeder, net))
    if o["svg"]:
        put("overlay.svg", render_overlay_svg(street, feeder))
        put("voltage_profile.svg", render_voltage_profile_svg(results, cfg.raw["powerflow"]["v_min"]))
    lines = [table]
    for name in cfg.scenarios:
        rep = pf_doc[name].get("report") or {}
        lines.append(f"{name:<15} dV_max={rep.get('delta_v_max', float('nan')):.5f}  "
                     f"rho_max={rep.get('rho_max', float('nan')):.4f}  V_min={rep.get('v_min_observed', float('nan')):.5f}  "
                     f"above bound: {rep.get('v_bound_satisfied')}\n")
    return StageOutcome(written, text="".join(lines))


STAGE_FUNCS = {
    "ingest": stage_ingest,
    "synth": stage_synth,
    "electrify": stage_electrify,
    "pf": stage_pf,
    "report": stage_report,
}


def run_stage(name: str, cfg: PipelineConfig, src: Path, out: Path) -> StageOutcome:
    src, out = Path(src), Path(out)
    out.mkdir(parents=True, exist_ok=True)
    if src != out and name != "ingest":
        # carry earlier intermediates forward so later stages find everything in one place
        for stage in STAGES[:STAGES.index(name)]:
            for fname in STAGE_OUTPUTS[stage]:
                if (src / fname).exists() and fname.endswith(".json"):
                    (out / fname).write_bytes((src / fname).read_bytes())
    try:
        return STAGE_FUNCS[name](cfg, out, out)
    except BaseException as exc:
        exc.stage = name
        raise


@dataclass
class RunResult:
    timings: dict[str, float]
    written: list[Path]
    timed_out: bool
    text: str


def run_pipeline(cfg: PipelineConfig, out: Path) -> RunResult:
    """All stages in order, plus ``manifest.json`` with timings and digests.

    On an exception every file this run wrote is removed before re-raising.
    """
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    timings = {}
    written: list[Path] = []
    timed_out = False
    text = ""
    try:
        for name in STAGES:
            t0 = time.perf_counter()
            res = STAGE_FUNCS[name](cfg, out, out)
            timings[name] = time.perf_counter() - t0
            log.info("stage %-9s %.3f s", name, timings[name])
            written += res.written
            timed_out |= res.timed_out
            text += res.text
    except BaseException as exc:
        for p in written:
            p.unlink(missing_ok=True)
        exc.stage = name
        raise
    manifest = {
        "tool_version": __version__,
        "config_digest": cfg.digest,
        "stages": [{"name": k, "seconds": v} for k, v in timings.items()],
        "artifacts": {p.name: sha256(p.read_bytes()) for p in sorted(written)},
        "solver_timed_out": timed_out,
    }
    _dump(out / "manifest.json", manifest)
    return RunResult(timings, written + [out / "manifest.json"], timed_out, text)
