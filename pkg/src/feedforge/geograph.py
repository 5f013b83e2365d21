"""Street-network ingestion and candidate-graph extraction.

Raw map data (OSM XML or GeoJSON line work) is parsed into a :class:`GeoGraph`,
projected into a local metric frame, cleaned, reduced to intersections and
dead-ends by merging degree-2 chains, and finally scored with the composite
edge weight ``w = lambda_d * d + lambda_c * c_cls + lambda_b * c_bend``.
"""

from __future__ import annotations

import json
import logging
import math
import xml.etree.ElementTree as ET
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

from .errors import ConfigError, EmptyGraphError, ParseError, ProjectionError, DataError

log = logging.getLogger(__name__)

# WGS84
_A = 6378137.0
_F = 1 / 298.257223563
_E2 = _F * (2 - _F)

MAX_SPAN_DEG = 2.0

DEFAULT_CLASS_PENALTIES = {
    "residential": 1.0,
    "living_street": 1.0,
    "unclassified": 1.2,
    "service": 1.2,
    "tertiary": 1.5,
    "tertiary_link": 1.5,
    "secondary": 2.5,
    "secondary_link": 2.5,
    "primary": 4.0,
    "primary_link": 4.0,
    "trunk": 6.0,
    "trunk_link": 6.0,
}

DEFAULT_EXCLUDED = frozenset({
    "footway", "path", "cycleway", "steps", "pedestrian", "track", "bridleway",
    "corridor", "motorway", "motorway_link", "construction", "proposed",
    "platform", "elevator", "raceway", "bus_guideway",
})


@dataclass(frozen=True)
class GeoPoint:
    lon: float
    lat: float
    x: float | None = None
    y: float | None = None

    def __post_init__(self):
        if not (-180.0 <= self.lon <= 180.0) or not (-90.0 <= self.lat <= 90.0):
            raise DataError(f"coordinate out of range: lon={self.lon}, lat={self.lat}")

    @property
    def projected(self) -> bool:
        return self.x is not None and self.y is not None


@dataclass(frozen=True)
class LocalFrame:
    """East-north tangent plane on the WGS84 ellipsoid, origin at (lon0, lat0).

    Points are mapped through ECEF and dropped onto the tangent plane at the
    origin. Within a few kilometres the horizontal distances are accurate to
    a few parts per million against the ellipsoidal geodesic.
    """

    lon0: float
    lat0: float

    def _ecef(self, lon, lat):
        lam, phi = math.radians(lon), math.radians(lat)
        sp, cp = math.sin(phi), math.cos(phi)
        n = _A / math.sqrt(1.0 - _E2 * sp * sp)
        return n * cp * math.cos(lam), n * cp * math.sin(lam), n * (1.0 - _E2) * sp

    def forward(self, lon: float, lat: float) -> tuple[float, float]:
        if lon == self.lon0 and lat == self.lat0:
            return 0.0, 0.0
        x0, y0, z0 = self._ecef(self.lon0, self.lat0)
        x1, y1, z1 = self._ecef(lon, lat)
        dx, dy, dz = x1 - x0, y1 - y0, z1 - z0
        lam, phi = math.radians(self.lon0), math.radians(self.lat0)
        sl, cl, sp, cp = math.sin(lam), math.cos(lam), math.sin(phi), math.cos(phi)
        east = -sl * dx + cl * dy
        north = -sp * cl * dx - sp * sl * dy + cp * dz
        return east, north

    def inverse(self, x: float, y: float) -> tuple[float, float]:
        lon, lat = self.lon0, self.lat0
        for _ in range(8):
            phi = math.radians(lat)
            s = math.sin(phi)
            w = math.sqrt(1.0 - _E2 * s * s)
            n = _A / w
            m = _A * (1.0 - _E2) / w**3
            fx, fy = self.forward(lon, lat)
            lat += math.degrees((y - fy) / m)
            lon += math.degrees((x - fx) / (n * math.cos(phi)))
        return lon, lat


@dataclass(frozen=True)
class GeoEdge:
    u: str
    v: str
    geometry: tuple[GeoPoint, ...]
    road_class: str

    @property
    def length(self) -> float:
        return polyline_length(self.geometry)


@dataclass(frozen=True)
class GeoGraph:
    nodes: Mapping[str, GeoPoint]
    edges: tuple[GeoEdge, ...]
    frame: LocalFrame | None = None

    def __post_init__(self):
        for e in self.edges:
            if e.u not in self.nodes or e.v not in self.nodes:
                raise DataError(f"edge endpoint missing from nodes: {e.u}-{e.v}")

    @property
    def projected(self) -> bool:
        return self.frame is not None


@dataclass(frozen=True)
class ScoringWeights:
    lambda_d: float = 0.0
    lambda_c: float = 1.0
    lambda_b: float = 0.5

    def __post_init__(self):
        vals = (self.lambda_d, self.lambda_c, self.lambda_b)
        if any(not math.isfinite(v) or v < 0 for v in vals):
            raise ConfigError(f"scoring weights must be finite and >= 0, got {vals}")
        if all(v == 0 for v in vals):
            raise ConfigError("scoring weights must not all be zero")


@dataclass(frozen=True)
class CandidateEdge:
    u: str
    v: str
    geometry: tuple[GeoPoint, ...]
    road_class: str
    d: float
    c_cls: float = 0.0
    c_bend: float = 0.0
    w: float = 0.0


@dataclass(frozen=True)
class CandidateGraph:
    nodes: Mapping[str, GeoPoint]
    edges: tuple[CandidateEdge, ...]
    frame: LocalFrame | None = None
    weights: ScoringWeights | None = None

    def __post_init__(self):
        for e in self.edges:
            if e.u not in self.nodes or e.v not in self.nodes:
                raise DataError(f"edge endpoint missing from nodes: {e.u}-{e.v}")

    @property
    def projected(self) -> bool:
        return self.frame is not None


# -- geometry helpers -------------------------------------------------------

def polyline_length(points: Iterable[GeoPoint]) -> float:
    pts = list(points)
    if any(not p.projected for p in pts):
        raise ProjectionError("arc length needs projected coordinates")
    return math.fsum(math.hypot(b.x - a.x, b.y - a.y) for a, b in zip(pts, pts[1:]))


def bend_angle(points: Iterable[GeoPoint]) -> float:
    """Sum of absolute heading changes (radians) at interior vertices."""
    dirs = []
    pts = list(points)
    for a, b in zip(pts, pts[1:]):
        dx, dy = b.x - a.x, b.y - a.y
        if dx != 0.0 or dy != 0.0:
            dirs.append((dx, dy))
    total = []
    for (ax, ay), (bx, by) in zip(dirs, dirs[1:]):
        total.append(abs(math.atan2(ax * by - ay * bx, ax * bx + ay * by)))
    return math.fsum(total)


def _components(node_ids, edges):
    adj = defaultdict(list)
    for e in edges:
        adj[e.u].append(e.v)
        adj[e.v].append(e.u)
    seen = set()
    comps = []
    for n in node_ids:
        if n in seen:
            continue
        comp, stack = [], [n]
        seen.add(n)
        while stack:
            cur = stack.pop()
            comp.append(cur)
            for nb in adj[cur]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        comps.append(comp)
    return comps


def component_count(graph: GeoGraph | CandidateGraph) -> int:
    return len(_components(list(graph.nodes), graph.edges))


def nearest_node(graph: GeoGraph | CandidateGraph, lon: float, lat: float) -> str:
    """Node closest to a WGS84 coordinate (ties go to the first node in order)."""
    if not graph.nodes:
        raise EmptyGraphError("graph has no nodes")
    if graph.frame is None:
        raise ProjectionError("graph must be projected")
    x, y = graph.frame.forward(lon, lat)
    return min(graph.nodes, key=lambda n: math.hypot(graph.nodes[n].x - x, graph.nodes[n].y - y))


# -- parsing ----------------------------------------------------------------

def _is_bridge_or_tunnel(tags):
    return any(tags.get(k, "no") not in ("no", "") for k in ("bridge", "tunnel"))


def _seg_cross(p1, p2, p3, p4):
    """Parameters (t, s) of a proper crossing of p1p2 and p3p4, else None."""
    rx, ry = p2[0] - p1[0], p2[1] - p1[1]
    sx, sy = p4[0] - p3[0], p4[1] - p3[1]
    den = rx * sy - ry * sx
    if den == 0.0:
        return None
    qx, qy = p3[0] - p1[0], p3[1] - p1[1]
    t = (qx * sy - qy * sx) / den
    s = (qx * ry - qy * rx) / den
    eps = 1e-12
    if eps < t < 1 - eps and eps < s < 1 - eps:
        return t, s
    return None


def _insert_crossings(ways, coords):
    """Add a synthetic node wherever two ways cross without sharing a node."""
    cell = 5e-4
    buckets = defaultdict(list)
    segs = []
    for wi, (_, refs, tags) in enumerate(ways):
        if _is_bridge_or_tunnel(tags):
            continue
        for si, (a, b) in enumerate(zip(refs, refs[1:])):
            pa, pb = coords[a], coords[b]
            k = len(segs)
            segs.append((wi, si, a, b, tags.get("layer", "0")))
            for cx in range(int(math.floor(min(pa[0], pb[0]) / cell)), int(math.floor(max(pa[0], pb[0]) / cell)) + 1):
                for cy in range(int(math.floor(min(pa[1], pb[1]) / cell)), int(math.floor(max(pa[1], pb[1]) / cell)) + 1):
                    buckets[(cx, cy)].append(k)
    pairs = set()
    for members in buckets.values():
        for i, ka in enumerate(members):
            for kb in members[i + 1:]:
                if segs[ka][0] != segs[kb][0]:
                    pairs.add((min(ka, kb), max(ka, kb)))
    hits = []
    for ka, kb in sorted(pairs):
        wa, sa, a1, a2, la = segs[ka]
        wb, sb, b1, b2, lb = segs[kb]
        if la != lb or {a1, a2} & {b1, b2}:
            continue
        r = _seg_cross(coords[a1], coords[a2], coords[b1], coords[b2])
        if r is not None:
            hits.append((wa, sa, r[0], wb, sb, r[1]))
    if not hits:
        return ways
    inserts = defaultdict(list)
    for k, (wa, sa, t, wb, sb, s) in enumerate(hits):
        nid = f"x{k}"
        p1, p2 = coords[ways[wa][1][sa]], coords[ways[wa][1][sa + 1]]
        coords[nid] = (p1[0] + t * (p2[0] - p1[0]), p1[1] + t * (p2[1] - p1[1]))
        inserts[(wa, sa)].append((t, nid))
        inserts[(wb, sb)].append((s, nid))
    out = []
    for wi, (wid, refs, tags) in enumerate(ways):
        new = [refs[0]]
        for si in range(len(refs) - 1):
            for _, nid in sorted(inserts.get((wi, si), ())):
                new.append(nid)
            new.append(refs[si + 1])
        out.append((wid, new, tags))
    return out


def _ways_to_graph(ways, coords):
    uses = defaultdict(int)
    for _, refs, _ in ways:
        for r in refs:
            uses[r] += 1
    anchors = set()
    for _, refs, _ in ways:
        anchors.add(refs[0])
        anchors.add(refs[-1])
    anchors.update(r for r, c in uses.items() if c >= 2)
    points = {}

    def pt(ref):
        if ref not in points:
            lon, lat = coords[ref]
            points[ref] = GeoPoint(lon, lat)
        return points[ref]

    nodes = {}
    edges = []
    for _, refs, tags in ways:
        cls = tags["highway"]
        start = 0
        for i in range(1, len(refs)):
            if refs[i] in anchors:
                seg = refs[start:i + 1]
                for r in (seg[0], seg[-1]):
                    nodes.setdefault(r, pt(r))
                edges.append(GeoEdge(seg[0], seg[-1], tuple(pt(r) for r in seg), cls))
                start = i
    return GeoGraph(nodes, tuple(edges))


def parse_osm_xml(raw: bytes | str, include: Iterable[str] | None = tuple(DEFAULT_CLASS_PENALTIES),
                  exclude: Iterable[str] = DEFAULT_EXCLUDED, split_crossings: bool = True) -> GeoGraph:
    """Parse OSM XML into a GeoGraph of intersections, way endpoints and road edges.

    Ways without a ``highway`` tag are ignored, as are classes in ``exclude``
    or (when ``include`` is given) outside ``include``. Ways are split at every
    node they share with another way. With ``split_crossings`` a synthetic
    node is also inserted where two ways on the same layer cross without a
    shared node (bridges and tunnels excepted).
    """
    try:
        root = ET.fromstring(raw)
    except ET.ParseError as exc:
        line, col = exc.position
        raise ParseError(f"malformed OSM XML: {exc}", line, col) from None
    include = None if include is None else set(include)
    exclude = set(exclude)
    coords = {}
    for el in root.iter("node"):
        try:
            coords[el.get("id")] = (float(el.get("lon")), float(el.get("lat")))
        except (TypeError, ValueError):
            raise ParseError(f"node {el.get('id')!r} lacks numeric lon/lat") from None
    ways = []
    for el in root.iter("way"):
        tags = {t.get("k"): t.get("v") for t in el.iter("tag")}
        cls = tags.get("highway")
        if cls is None or cls in exclude or (include is not None and cls not in include):
            continue
        refs = []
        for nd in el.iter("nd"):
            r = nd.get("ref")
            if r in coords and (not refs or refs[-1] != r):
                refs.append(r)
        if len(refs) >= 2:
            ways.append((el.get("id"), refs, tags))
    if not ways:
        raise EmptyGraphError("no usable highway ways in OSM input")
    if split_crossings:
        ways = _insert_crossings(ways, coords)
    return _ways_to_graph(ways, coords)


def parse_geojson(raw: bytes | str, snap_tolerance_m: float = 0.5,
                  default_class: str = "residential") -> GeoGraph:
    """Build a GeoGraph from a FeatureCollection of LineStrings.

    Line endpoints closer than ``snap_tolerance_m`` (measured in a local
    metric frame) are merged into one node; interior coordinates become edge
    geometry. Other geometry types are skipped and counted in a warning.
    """
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None
    if isinstance(doc, dict) and doc.get("type") == "FeatureCollection":
        features = doc.get("features") or []
    elif isinstance(doc, dict) and doc.get("type") == "Feature":
        features = [doc]
    else:
        raise ParseError("expected a GeoJSON FeatureCollection")
    lines = []
    skipped = 0
    for feat in features:
        geom = (feat or {}).get("geometry") or {}
        coords = geom.get("coordinates") or []
        if geom.get("type") != "LineString" or len(coords) < 2:
            skipped += 1
            continue
        props = feat.get("properties") or {}
        cls = props.get("road_class") or props.get("highway") or default_class
        lines.append(([GeoPoint(float(c[0]), float(c[1])) for c in coords], str(cls)))
    if skipped:
        log.warning("parse_geojson skipped %d non-LineString feature(s)", skipped)
    if not lines:
        raise EmptyGraphError("no LineString features in GeoJSON input")

    ends = [p for pts, _ in lines for p in (pts[0], pts[-1])]
    frame = LocalFrame(math.fsum(p.lon for p in ends) / len(ends), math.fsum(p.lat for p in ends) / len(ends))
    xy = [frame.forward(p.lon, p.lat) for p in ends]
    parent = list(range(len(ends)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    tol = float(snap_tolerance_m)
    if tol > 0:
        grid = defaultdict(list)
        for i, (x, y) in enumerate(xy):
            gx, gy = int(math.floor(x / tol)), int(math.floor(y / tol))
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    for j in grid.get((gx + dx, gy + dy), ()):
                        if math.hypot(xy[j][0] - x, xy[j][1] - y) <= tol:
                            ri, rj = find(i), find(j)
                            if ri != rj:
                                parent[max(ri, rj)] = min(ri, rj)
            grid[(gx, gy)].append(i)
    else:
        for i, p in enumerate(ends):
            for j in range(i):
                if ends[j].lon == p.lon and ends[j].lat == p.lat:
                    parent[i] = find(j)
                    break

    node_of = {}
    nodes = {}
    ids = []
    for i in range(len(ends)):
        r = find(i)
        if r not in node_of:
            nid = f"g{len(node_of)}"
            node_of[r] = nid
            nodes[nid] = ends[r]
        ids.append(node_of[r])
    edges = []
    for k, (pts, cls) in enumerate(lines):
        u, v = ids[2 * k], ids[2 * k + 1]
        geom = (nodes[u], *pts[1:-1], nodes[v])
        edges.append(GeoEdge(u, v, geom, cls))
    return GeoGraph(nodes, tuple(edges))


# -- projection and cleaning ------------------------------------------------

def project(graph: GeoGraph) -> GeoGraph:
    """Fill x/y (metres) in a tangent-plane frame centred on the node centroid."""
    if not graph.nodes:
        raise EmptyGraphError("cannot project an empty graph")
    lons = [p.lon for p in graph.nodes.values()]
    lats = [p.lat for p in graph.nodes.values()]
    for e in graph.edges:
        lons.extend(p.lon for p in e.geometry)
        lats.extend(p.lat for p in e.geometry)
    if max(lons) - min(lons) > MAX_SPAN_DEG or max(lats) - min(lats) > MAX_SPAN_DEG:
        raise ProjectionError(f"graph spans more than {MAX_SPAN_DEG} degrees; local projection refused")
    node_lons = [p.lon for p in graph.nodes.values()]
    node_lats = [p.lat for p in graph.nodes.values()]
    frame = LocalFrame(math.fsum(node_lons) / len(node_lons), math.fsum(node_lats) / len(node_lats))
    cache = {}

    def proj(p):
        key = (p.lon, p.lat)
        if key not in cache:
            x, y = frame.forward(p.lon, p.lat)
            cache[key] = GeoPoint(p.lon, p.lat, x, y)
        return cache[key]

    nodes = {n: proj(p) for n, p in graph.nodes.items()}
    edges = tuple(replace(e, geometry=tuple(proj(p) for p in e.geometry)) for e in graph.edges)
    return GeoGraph(nodes, edges, frame)


def project_points(points: Iterable[GeoPoint], frame: LocalFrame) -> list[GeoPoint]:
    out = []
    for p in points:
        x, y = frame.forward(p.lon, p.lat)
        out.append(GeoPoint(p.lon, p.lat, x, y))
    return out


def clean(graph: GeoGraph) -> GeoGraph:
    """Drop self-loops and parallel duplicates, keep the largest component."""
    if not graph.nodes:
        raise EmptyGraphError("cannot clean an empty graph")
    if not graph.projected:
        raise ProjectionError("clean() needs a projected graph")
    best = {}
    order = []
    for e in graph.edges:
        if e.u == e.v:
            continue
        key = frozenset((e.u, e.v))
        if key not in best:
            best[key] = e
            order.append(key)
        elif e.length < best[key].length:
            best[key] = e
    edges = [best[k] for k in order]
    comps = _components(list(graph.nodes), edges)
    keep = set(max(comps, key=len))  # max() returns the first of equal-sized components
    nodes = {n: p for n, p in graph.nodes.items() if n in keep}
    edges = tuple(e for e in edges if e.u in keep)
    return GeoGraph(nodes, edges, graph.frame)


# -- simplification ---------------------------------------------------------

def _dominant_class(pieces):
    by_cls = defaultdict(list)
    for cls, length, _ in pieces:
        by_cls[cls].append(length)
    totals = {c: math.fsum(v) for c, v in by_cls.items()}
    return min(totals, key=lambda c: (-totals[c], c))


def simplify(graph: GeoGraph | CandidateGraph, keep: Iterable[str] = ()) -> CandidateGraph:
    """Merge every chain of degree-2 nodes into a single candidate edge.

    Intersections, dead-ends and nodes listed in ``keep`` survive. A chain
    that closes on its own anchor is split at the interior node farthest
    from it, and a graph that is one bare cycle is anchored at its two
    farthest-apart nodes; both cases leave a pair of parallel edges. Parallel
    chains between the same two anchors are all kept so no geometry is lost.
    The merged edge takes the road class covering most of its length.
    """
    if not graph.projected:
        raise ProjectionError("simplify() needs a projected graph")
    keep = set(keep)
    incident = defaultdict(list)
    for k, e in enumerate(graph.edges):
        incident[e.u].append(k)
        incident[e.v].append(k)
    ids = list(graph.nodes)

    def removable(n):
        return len(incident[n]) == 2 and n not in keep

    anchors = {n for n in ids if not removable(n)}
    if graph.edges and not anchors:
        # bare cycle: anchor at the two farthest-apart nodes
        pts = graph.nodes
        best = None
        for i, a in enumerate(ids):
            for b in ids[i + 1:]:
                dist = math.hypot(pts[a].x - pts[b].x, pts[a].y - pts[b].y)
                if best is None or dist > best[0]:
                    best = (dist, a, b)
        anchors = {best[1], best[2]}

    used = [False] * len(graph.edges)
    out = []

    def oriented(e, start):
        return list(e.geometry) if e.u == start else list(reversed(e.geometry))

    def emit(u, v, geom, pieces):
        out.append(CandidateEdge(u, v, tuple(geom), _dominant_class(pieces), polyline_length(geom)))

    for a in sorted(anchors):
        for k0 in incident[a]:
            if used[k0]:
                continue
            used[k0] = True
            e = graph.edges[k0]
            geom = oriented(e, a)
            pieces = [(e.road_class, polyline_length(e.geometry), 0)]
            interior = []  # (node, index of node in geom)
            cur = e.v if e.u == a else e.u
            while cur not in anchors:
                nxt = [k for k in incident[cur] if not used[k]]
                if not nxt:
                    break
                k = nxt[0]
                used[k] = True
                interior.append((cur, len(geom) - 1))
                e = graph.edges[k]
                pieces.append((e.road_class, polyline_length(e.geometry), len(geom) - 1))
                geom.extend(oriented(e, cur)[1:])
                cur = e.v if e.u == cur else e.u
            if cur == a and interior:
                pa = graph.nodes[a]
                far, idx = max(interior, key=lambda t: math.hypot(graph.nodes[t[0]].x - pa.x,
                                                                   graph.nodes[t[0]].y - pa.y))
                emit(a, far, geom[:idx + 1], [p for p in pieces if p[2] < idx])
                emit(a, far, geom[:idx - 1:-1], [p for p in pieces if p[2] >= idx])
                anchors.add(far)
                continue
            emit(a, cur, geom, pieces)

    kept = set()
    for e in out:
        kept.add(e.u)
        kept.add(e.v)
    if not out:
        kept = set(ids)
    nodes = {n: p for n, p in graph.nodes.items() if n in kept}
    return CandidateGraph(nodes, tuple(out), graph.frame)


# -- scoring ----------------------------------------------------------------

def composite_weight(d: float, c_cls: float, c_bend: float, weights: ScoringWeights) -> float:
    return weights.lambda_d * d + weights.lambda_c * c_cls + weights.lambda_b * c_bend


def score_edges(graph: CandidateGraph, weights: ScoringWeights,
                class_penalties: Mapping[str, float | None] = DEFAULT_CLASS_PENALTIES) -> CandidateGraph:
    if not isinstance(weights, ScoringWeights):
        raise ConfigError("weights must be a ScoringWeights instance")
    edges = []
    for e in graph.edges:
        pen = class_penalties.get(e.road_class)
        if pen is None:
            raise ConfigError(f"no class penalty configured for road class {e.road_class!r}")
        if pen < 0:
            raise ConfigError(f"class penalty for {e.road_class!r} must be >= 0")
        c_bend = bend_angle(e.geometry)
        w = composite_weight(e.d, float(pen), c_bend, weights)
        edges.append(replace(e, c_cls=float(pen), c_bend=c_bend, w=w))
    return CandidateGraph(graph.nodes, tuple(edges), graph.frame, weights)


# -- serialisation ----------------------------------------------------------

def _pt_json(p):
    return [p.lon, p.lat, p.x, p.y]


def _pt_from(v):
    return GeoPoint(v[0], v[1], v[2], v[3])


def _node_json(nid, p):
    return {"id": nid, "lon": p.lon, "lat": p.lat, "x": p.x, "y": p.y}


def candidate_to_dict(graph: CandidateGraph) -> dict:
    return {
        "frame": None if graph.frame is None else [graph.frame.lon0, graph.frame.lat0],
        "weights": None if graph.weights is None else {
            "lambda_d": graph.weights.lambda_d,
            "lambda_c": graph.weights.lambda_c,
            "lambda_b": graph.weights.lambda_b,
        },
        "nodes": [_node_json(n, p) for n, p in graph.nodes.items()],
        "edges": [
            {"u": e.u, "v": e.v, "d": e.d, "c_cls": e.c_cls, "c_bend": e.c_bend, "w": e.w,
             "class": e.road_class, "geometry": [_pt_json(p) for p in e.geometry]}
            for e in graph.edges
        ],
    }


def _nodes_from(items):
    return {str(n["id"]): GeoPoint(n["lon"], n["lat"], n.get("x"), n.get("y")) for n in items}


def _frame_from(v):
    return None if v is None else LocalFrame(v[0], v[1])


def candidate_from_dict(doc: Mapping) -> CandidateGraph:
    nodes = _nodes_from(doc["nodes"])
    edges = []
    for e in doc["edges"]:
        geom = tuple(_pt_from(v) for v in e["geometry"]) if e.get("geometry") else (nodes[e["u"]], nodes[e["v"]])
        edges.append(CandidateEdge(e["u"], e["v"], geom, e["class"], e["d"], e["c_cls"], e["c_bend"], e["w"]))
    w = doc.get("weights")
    weights = None if w is None else ScoringWeights(w["lambda_d"], w["lambda_c"], w["lambda_b"])
    return CandidateGraph(nodes, tuple(edges), _frame_from(doc.get("frame")), weights)


def geograph_to_dict(graph: GeoGraph) -> dict:
    return {
        "frame": None if graph.frame is None else [graph.frame.lon0, graph.frame.lat0],
        "nodes": [_node_json(n, p) for n, p in graph.nodes.items()],
        "edges": [
            {"u": e.u, "v": e.v, "class": e.road_class, "geometry": [_pt_json(p) for p in e.geometry]}
            for e in graph.edges
        ],
    }


def geograph_from_dict(doc: Mapping) -> GeoGraph:
    nodes = _nodes_from(doc["nodes"])
    edges = tuple(
        GeoEdge(e["u"], e["v"], tuple(_pt_from(v) for v in e["geometry"]), e["class"]) for e in doc["edges"]
    )
    return GeoGraph(nodes, edges, _frame_from(doc.get("frame")))
