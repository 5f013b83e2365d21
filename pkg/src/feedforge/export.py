"""Interchange formats and SVG figures for a generated feeder."""

from __future__ import annotations

import hashlib
import json
import math
import re
from typing import Mapping

from . import __version__
from .electrify import Bus, ElectricalNetwork, Line, Load, validate_network
from .errors import ConvergenceError, DataError, NetworkValidationError, SchemaError
from .geograph import GeoGraph
from .powerflow import PowerFlowResult
from .synth.feeder import FeederGraph

SCHEMA_VERSION = "1.0"
SUPPORTED_VERSIONS = frozenset({"1.0"})


def canonical_json(doc) -> bytes:
    """Sorted keys, no whitespace, floats via repr: one byte string per value."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False).encode()


def sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


# -- network JSON -------------------------------------------------------------

def network_to_dict(net: ElectricalNetwork) -> dict:
    return {
        "slack_bus": net.slack_bus,
        "slack_v_pu": net.slack_v_pu,
        "base_mva": net.base_mva,
        "base_kv": net.base_kv,
        "total_p_mw": net.total_p_mw,
        "buses": [{"id": b.id, "x": b.x, "y": b.y, "lon": b.lon, "lat": b.lat} for b in net.buses],
        "lines": [
            {"id": ln.id, "from": ln.from_bus, "to": ln.to_bus, "r_ohm": ln.r_ohm, "x_ohm": ln.x_ohm,
             "rating_mva": ln.rating_mva, "length_km": ln.length_km, "class": ln.line_class,
             "r_per_km": ln.r_per_km, "x_per_km": ln.x_per_km}
            for ln in net.lines
        ],
        "loads": [{"bus": ld.bus, "p_mw": ld.p_mw, "q_mvar": ld.q_mvar, "households": ld.households}
                  for ld in net.loads],
    }


def network_digest(net: ElectricalNetwork) -> str:
    return sha256(canonical_json(network_to_dict(net)))


def to_network_json(net: ElectricalNetwork, source_digest: str | None = None,
                    config_digest: str | None = None) -> bytes:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "provenance": {"source_digest": source_digest, "config_digest": config_digest,
                       "tool_version": __version__},
        "network": network_to_dict(net),
        "network_digest": network_digest(net),
    }
    return (json.dumps(doc, sort_keys=True, indent=1, allow_nan=False) + "\n").encode()


def network_from_dict(doc: Mapping) -> ElectricalNetwork:
    try:
        return ElectricalNetwork(
            buses=tuple(Bus(b["id"], b["x"], b["y"], b.get("lon"), b.get("lat")) for b in doc["buses"]),
            slack_bus=doc["slack_bus"],
            slack_v_pu=doc["slack_v_pu"],
            base_mva=doc["base_mva"],
            base_kv=doc["base_kv"],
            lines=tuple(
                Line(ln["id"], ln["from"], ln["to"], ln["r_ohm"], ln["x_ohm"], ln["rating_mva"], ln["length_km"],
                     ln["class"], ln["r_per_km"], ln["x_per_km"])
                for ln in doc["lines"]
            ),
            loads=tuple(Load(ld["bus"], ld["p_mw"], ld["q_mvar"], int(ld["households"])) for ld in doc["loads"]),
            total_p_mw=doc["total_p_mw"],
        )
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"network document is malformed: {exc!r}") from None


def from_network_json(raw: bytes | str) -> ElectricalNetwork:
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"network document is not JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})") from None
    if not isinstance(doc, dict):
        raise SchemaError("network document must be a JSON object")
    version = doc.get("schema_version")
    if version not in SUPPORTED_VERSIONS:
        raise SchemaError(f"unsupported schema_version {version!r}")
    if "network" not in doc:
        raise SchemaError("network document has no 'network' member")
    net = network_from_dict(doc["network"])
    want = doc.get("network_digest")
    if want is not None and want != network_digest(net):
        raise SchemaError("network_digest does not match the network content")
    bad = validate_network(net)
    if bad:
        raise NetworkValidationError("imported network failed validation", bad)
    return net


# -- OpenDSS ------------------------------------------------------------------

def _dss_names(ids):
    out = {}
    used = set()
    for i in ids:
        base = re.sub(r"[^A-Za-z0-9_-]", "_", str(i)) or "_"
        name, k = base, 1
        while name.lower() in used:
            k += 1
            name = f"{base}_{k}"
        used.add(name.lower())
        out[i] = name
    return out


def to_opendss(net: ElectricalNetwork) -> str:
    """Balanced positive-sequence OpenDSS deck for the network.

    Lines carry their per-km impedance and length in km; shunt capacitance
    is zeroed because the network model has none. Loads with P = Q = 0 are
    omitted.
    """
    bus = _dss_names([b.id for b in net.buses])
    line_names = _dss_names([ln.id for ln in net.lines])
    kv = net.base_kv
    out = [
        "Clear",
        f"New Circuit.feedforge bus1={bus[net.slack_bus]} basekv={kv!r} pu={net.slack_v_pu!r} "
        "phases=3 MVAsc3=1e6 MVAsc1=1e6",
    ]
    for ln in net.lines:
        amps = ln.rating_mva * 1000.0 / (math.sqrt(3.0) * kv)
        out.append(
            f"New Line.{line_names[ln.id]} bus1={bus[ln.from_bus]} bus2={bus[ln.to_bus]} phases=3 "
            f"R1={ln.r_per_km!r} X1={ln.x_per_km!r} R0={ln.r_per_km!r} X0={ln.x_per_km!r} C1=0 C0=0 "
            f"length={ln.length_km!r} units=km normamps={amps!r}"
        )
    for ld in net.loads:
        if ld.p_mw == 0 and ld.q_mvar == 0:
            continue
        out.append(
            f"New Load.LD_{bus[ld.bus]} bus1={bus[ld.bus]} phases=3 kV={kv!r} "
            f"kW={ld.p_mw * 1000.0!r} kvar={ld.q_mvar * 1000.0!r} model=1"
        )
    out += [f"Set voltagebases=[{kv!r}]", "Calcvoltagebases", "Solve"]
    return "\n".join(out) + "\n"


# -- GeoJSON ------------------------------------------------------------------

def to_geojson(feeder: FeederGraph, net: ElectricalNetwork) -> bytes:
    """Point per bus and LineString per line, following the street geometry."""
    loads = {ld.bus: ld for ld in net.loads}
    into = {e.child: e for e in feeder.edges}
    feats = []
    for b in net.buses:
        if b.lon is None or b.lat is None:
            raise DataError(f"bus {b.id!r} has no lon/lat")
        ld = loads.get(b.id)
        feats.append({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [b.lon, b.lat]},
            "properties": {
                "id": b.id,
                "depth": feeder.depth.get(b.id),
                "is_source": b.id == net.slack_bus,
                "p_mw": ld.p_mw if ld else 0.0,
                "q_mvar": ld.q_mvar if ld else 0.0,
                "households": ld.households if ld else 0,
            },
        })
    for ln in net.lines:
        e = into.get(ln.to_bus)
        if e is None or e.parent != ln.from_bus:
            raise DataError(f"line {ln.id} has no matching feeder edge")
        feats.append({
            "type": "Feature",
            "geometry": {"type": "LineString", "coordinates": [[p.lon, p.lat] for p in e.geometry]},
            "properties": {
                "id": ln.id, "from": ln.from_bus, "to": ln.to_bus, "road_class": e.road_class,
                "line_class": ln.line_class, "length_km": ln.length_km, "r_ohm": ln.r_ohm, "x_ohm": ln.x_ohm,
                "rating_mva": ln.rating_mva,
            },
        })
    doc = {"type": "FeatureCollection", "features": feats}
    return (json.dumps(doc, indent=1, allow_nan=False) + "\n").encode()


# -- SVG ----------------------------------------------------------------------

def _fmt(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


class _Canvas:
    """Maps planar metres into an SVG user space with y pointing down."""

    def __init__(self, xs, ys, width=800.0):
        x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
        span = max(x1 - x0, y1 - y0) or 1.0
        pad = 0.05 * span
        self.x0, self.y1 = x0 - pad, y1 + pad
        self.w = (x1 - x0) + 2 * pad or 2 * pad
        self.h = (y1 - y0) + 2 * pad or 2 * pad
        self.scale = width / self.w
        self.width, self.height = width, self.h * self.scale

    def pt(self, x, y):
        return _fmt((x - self.x0) * self.scale), _fmt((self.y1 - y) * self.scale)

    def path(self, pts):
        cmds = []
        for i, (x, y) in enumerate(pts):
            sx, sy = self.pt(x, y)
            cmds.append(f"{'M' if i == 0 else 'L'}{sx} {sy}")
        return " ".join(cmds)


def _svg(width, height, body):
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(width)}" height="{_fmt(height)}" '
            f'viewBox="0 0 {_fmt(width)} {_fmt(height)}">\n')
    return (head + "".join(body) + "</svg>\n").encode()


def render_overlay_svg(street: GeoGraph, feeder: FeederGraph) -> bytes:
    """Street layer in grey, feeder edges highlighted, source as a filled circle."""
    if not feeder.nodes:
        raise DataError("cannot render an empty feeder")
    pts = [p for e in street.edges for p in e.geometry] + list(street.nodes.values())
    pts += [p for e in feeder.edges for p in e.geometry] + list(feeder.nodes.values())
    if any(not p.projected for p in pts):
        raise DataError("overlay needs projected coordinates")
    cv = _Canvas([p.x for p in pts], [p.y for p in pts])
    body = ['<rect width="100%" height="100%" fill="#ffffff"/>\n', '<g class="street" fill="none" stroke="#c8c8c8" '
            'stroke-width="1">\n']
    for e in street.edges:
        body.append(f'<path d="{cv.path([(p.x, p.y) for p in e.geometry])}"/>\n')
    body.append('</g>\n<g class="feeder" fill="none" stroke="#d62728" stroke-width="2.5" stroke-linecap="round">\n')
    for e in feeder.edges:
        body.append(f'<path class="feeder-edge" d="{cv.path([(p.x, p.y) for p in e.geometry])}"/>\n')
    body.append("</g>\n")
    src = feeder.nodes[feeder.root]
    sx, sy = cv.pt(src.x, src.y)
    body.append(f'<circle class="source" cx="{sx}" cy="{sy}" r="6" fill="#1f77b4" stroke="#000000"/>\n')
    return _svg(cv.width, cv.height, body)


_COLORS = ("#2ca02c", "#1f77b4", "#d62728", "#9467bd", "#ff7f0e", "#8c564b")


def bus_order(result: PowerFlowResult) -> list[str]:
    return sorted(result.v_pu, key=lambda b: (result.depth.get(b, 0), b))


def render_voltage_profile_svg(results: Mapping[str, PowerFlowResult], v_min: float = 0.95) -> bytes:
    """One polyline per converged scenario, buses ordered by (depth, id)."""
    good = {k: r for k, r in results.items() if r.converged}
    if not good:
        raise ConvergenceError("no converged power-flow result to plot")
    order = bus_order(next(iter(good.values())))
    vals = [r.v_pu[b] for r in good.values() for b in order] + [1.0, v_min]
    lo, hi = min(vals), max(vals)
    pad = 0.05 * ((hi - lo) or 0.01)
    lo, hi = lo - pad, hi + pad
    W, H, L, R, T, B = 800.0, 420.0, 60.0, 150.0, 20.0, 40.0
    pw, ph = W - L - R, H - T - B
    n = len(order)

    def px(i):
        return L + (pw * i / (n - 1) if n > 1 else pw / 2)

    def py(v):
        return T + ph * (hi - v) / (hi - lo)

    body = ['<rect width="100%" height="100%" fill="#ffffff"/>\n',
            f'<rect x="{_fmt(L)}" y="{_fmt(T)}" width="{_fmt(pw)}" height="{_fmt(ph)}" fill="none" stroke="#000000"/>\n']
    for label, v, dash in (("1.0 pu", 1.0, "none"), (f"V_min {v_min:g} pu", v_min, "6 4")):
        y = _fmt(py(v))
        body.append(f'<line class="reference" x1="{_fmt(L)}" y1="{y}" x2="{_fmt(L + pw)}" y2="{y}" '
                    f'stroke="#7f7f7f" stroke-dasharray="{dash}"/>\n')
        body.append(f'<text x="{_fmt(L + pw + 5)}" y="{y}" font-size="11" font-family="sans-serif">{label}</text>\n')
    for j, (name, r) in enumerate(good.items()):
        color = _COLORS[j % len(_COLORS)]
        pts = " ".join(f"{_fmt(px(i))},{_fmt(py(r.v_pu[b]))}" for i, b in enumerate(order))
        body.append(f'<polyline class="scenario" data-scenario="{name}" points="{pts}" fill="none" '
                    f'stroke="{color}" stroke-width="1.5"/>\n')
        if n == 1:
            x, y = pts.split(",")
            body.append(f'<circle cx="{x}" cy="{y}" r="3" fill="{color}"/>\n')
        ly = _fmt(T + 40 + 16 * j)
        body.append(f'<line x1="{_fmt(L + pw + 5)}" y1="{ly}" x2="{_fmt(L + pw + 25)}" y2="{ly}" stroke="{color}" '
                    f'stroke-width="2"/>\n')
        body.append(f'<text class="legend" x="{_fmt(L + pw + 30)}" y="{ly}" font-size="11" '
                    f'font-family="sans-serif">{name}</text>\n')
    for v in (lo + pad, hi - pad):
        body.append(f'<text x="{_fmt(L - 5)}" y="{_fmt(py(v))}" font-size="10" font-family="sans-serif" '
                    f'text-anchor="end">{v:.4f}</text>\n')
    body.append(f'<text x="{_fmt(L + pw / 2)}" y="{_fmt(H - 10)}" font-size="11" font-family="sans-serif" '
                f'text-anchor="middle">bus (sorted by depth, then id)</text>\n')
    return _svg(W, H, body)
