"""Pipeline configuration: one YAML file, every default overridable."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import yaml

from .electrify import DEFAULT_CLASS_TEMPLATE, DEFAULT_TEMPLATES, LineTemplate, LoadAllocationConfig
from .errors import ConfigError
from .geograph import DEFAULT_CLASS_PENALTIES, DEFAULT_EXCLUDED, GeoPoint, ScoringWeights
from .powerflow import DEFAULT_SCENARIOS, DEFAULT_V_MIN

SCENARIO_NAMES = ("sanity", "representative", "stressed")

DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "input": {
        "path": None,
        "format": "osm-xml",
        "activity": None,
        "snap_tolerance_m": 0.5,
        "exclude_classes": sorted(DEFAULT_EXCLUDED),
    },
    "scoring": {
        "lambda_d": 0.0,
        "lambda_c": 1.0,
        "lambda_b": 0.5,
        "class_penalties": dict(DEFAULT_CLASS_PENALTIES),
    },
    "synthesis": {
        "source": None,
        "required": {"top_k": 20},
        "alpha_geo": 1.0,
        "alpha_top": 0.5,
        "alpha_elec": 0.005,
        "solver": "exact",
        "timeout_s": 120.0,
    },
    "electrify": {
        "templates": {k: {"r_per_km": t.r_per_km, "x_per_km": t.x_per_km, "rating_mva": t.rating_mva}
                      for k, t in DEFAULT_TEMPLATES.items()},
        "class_map": dict(DEFAULT_CLASS_TEMPLATE),
        "eta": 1.0,
        "beta": 1.0,
        "epsilon": 1e-6,
        "total_p_mw": 1.44,
        "power_factor": 0.95,
        "centroids": None,
        "activity_radius_m": 60.0,
        "households": 360,
        "base_kv": 11.0,
        "base_mva": 1.0,
        "slack_v_pu": 1.0,
    },
    "powerflow": {
        "tol": 1e-8,
        "max_iter": 100,
        "v_min": DEFAULT_V_MIN,
        "scenarios": dict(DEFAULT_SCENARIOS),
    },
    "output": {
        "dir": "out",
        "opendss": True,
        "geojson": True,
        "svg": True,
        "summary": True,
    },
}

# mappings whose keys are user data rather than option names
_OPEN_MAPS = {("scoring", "class_penalties"), ("electrify", "templates"), ("electrify", "class_map")}


def _merge(base, over, path=()):
    out = copy.deepcopy(base)
    for k, v in over.items():
        where = ".".join(path + (str(k),))
        if path + (k,) in _OPEN_MAPS:
            if not isinstance(v, Mapping):
                raise ConfigError(f"{where} must be a mapping")
            out[k] = {**out[k], **v}
        elif k not in base:
            raise ConfigError(f"unknown config key {where!r}")
        elif isinstance(base[k], dict) and k != "required":
            if not isinstance(v, Mapping):
                raise ConfigError(f"{where} must be a mapping")
            out[k] = _merge(base[k], v, path + (k,))
        else:
            out[k] = copy.deepcopy(v)
    return out


def _num(section, key, lo=None, hi=None, lo_open=False, integer=False):
    v = section[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key} must be a number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(f"{key} must be an integer, got {v!r}")
    if lo is not None and (v < lo or (lo_open and v == lo)):
        raise ConfigError(f"{key} must be {'>' if lo_open else '>='} {lo}, got {v!r}")
    if hi is not None and v > hi:
        raise ConfigError(f"{key} must be <= {hi}, got {v!r}")
    return int(v) if integer else float(v)


def _points(items, where):
    try:
        return tuple(GeoPoint(float(lon), float(lat)) for lon, lat in items)
    except (TypeError, ValueError):
        raise ConfigError(f"{where} must be a list of [lon, lat] pairs") from None


@dataclass(frozen=True)
class PipelineConfig:
    """Validated configuration plus the raw merged document it came from."""

    raw: Mapping[str, Any]
    base_dir: Path

    @property
    def digest(self) -> str:
        doc = json.dumps(self.raw, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(doc).hexdigest()

    def resolve(self, path: str | None) -> Path | None:
        """Paths are relative to the config file; ``package:`` names bundled data."""
        if path is None:
            return None
        if path.startswith("package:"):
            from .fixtures import bundled_path
            return bundled_path(path[len("package:"):])
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def scoring_weights(self) -> ScoringWeights:
        s = self.raw["scoring"]
        return ScoringWeights(s["lambda_d"], s["lambda_c"], s["lambda_b"])

    @property
    def class_penalties(self) -> dict:
        return dict(self.raw["scoring"]["class_penalties"])

    @property
    def templates(self) -> dict[str, LineTemplate]:
        out = {}
        for name, t in self.raw["electrify"]["templates"].items():
            try:
                out[name] = LineTemplate(name, float(t["r_per_km"]), float(t["x_per_km"]), float(t["rating_mva"]))
            except (KeyError, TypeError):
                raise ConfigError(f"electrify.templates.{name} needs r_per_km, x_per_km and rating_mva") from None
        return out

    @property
    def load_config(self) -> LoadAllocationConfig:
        e = self.raw["electrify"]
        cents = None if e["centroids"] is None else _points(e["centroids"], "electrify.centroids")
        pf = e["power_factor"]
        return LoadAllocationConfig(e["eta"], e["beta"], e["epsilon"], e["total_p_mw"],
                                    dict(pf) if isinstance(pf, Mapping) else float(pf), cents,
                                    e["activity_radius_m"])

    @property
    def scenarios(self) -> dict[str, float]:
        return dict(self.raw["powerflow"]["scenarios"])


def validate(raw: Mapping, base_dir: Path) -> PipelineConfig:
    inp = raw["input"]
    if inp["format"] not in ("osm-xml", "geojson"):
        raise ConfigError(f"input.format must be osm-xml or geojson, got {inp['format']!r}")
    if not inp["path"]:
        raise ConfigError("input.path is required")
    _num(inp, "snap_tolerance_m", 0)
    _num(raw, "seed", integer=True)

    sc = raw["scoring"]
    for k in ("lambda_d", "lambda_c", "lambda_b"):
        _num(sc, k, 0)
    for cls, pen in sc["class_penalties"].items():
        if pen is not None and (isinstance(pen, bool) or not isinstance(pen, (int, float)) or pen < 0):
            raise ConfigError(f"scoring.class_penalties.{cls} must be a number >= 0 or null")

    sy = raw["synthesis"]
    for k in ("alpha_geo", "alpha_top", "alpha_elec"):
        _num(sy, k, 0)
    if sy["solver"] not in ("exact", "heuristic"):
        raise ConfigError(f"synthesis.solver must be exact or heuristic, got {sy['solver']!r}")
    _num(sy, "timeout_s", 0, lo_open=True)
    src = sy["source"]
    if src is not None and not (isinstance(src, Mapping) and (set(src) == {"node"} or set(src) == {"lon", "lat"})):
        raise ConfigError("synthesis.source must be {node: id} or {lon: .., lat: ..}")
    req = sy["required"]
    if not (isinstance(req, Mapping) and len(req) == 1 and next(iter(req)) in ("nodes", "coordinates", "top_k")):
        raise ConfigError("synthesis.required must be one of {nodes: [...]}, {coordinates: [...]}, {top_k: K}")
    if "top_k" in req:
        _num(req, "top_k", 0, integer=True)

    el = raw["electrify"]
    for k in ("epsilon", "base_kv", "base_mva", "slack_v_pu"):
        _num(el, k, 0, lo_open=True)
    for k in ("total_p_mw", "activity_radius_m"):
        _num(el, k, 0)
    for k in ("eta", "beta"):
        _num(el, k)
    _num(el, "households", 0, integer=True)

    pf = raw["powerflow"]
    _num(pf, "tol", 0, lo_open=True)
    _num(pf, "max_iter", 1, integer=True)
    _num(pf, "v_min", 0)
    scen = pf["scenarios"]
    if not isinstance(scen, Mapping) or set(scen) != set(SCENARIO_NAMES):
        raise ConfigError(f"powerflow.scenarios must define exactly {', '.join(SCENARIO_NAMES)}")
    for k in SCENARIO_NAMES:
        _num(scen, k, 0)

    cfg = PipelineConfig(raw, base_dir)
    cfg.scoring_weights, cfg.templates, cfg.load_config  # construct once to surface errors early
    return cfg


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from None
    return config_from_dict(doc or {}, path.parent)


def config_from_dict(doc: Mapping, base_dir: str | Path = ".") -> PipelineConfig:
    if not isinstance(doc, Mapping):
        raise ConfigError("config must be a mapping at the top level")
    raw = _merge(DEFAULTS, doc)
    return validate(raw, Path(base_dir).resolve())
