"""Reproducible synthetic street fixtures.

The bundled files in ``feedforge/data`` are the output of these generators
with their default arguments; ``write_bundled`` regenerates them.
"""

from __future__ import annotations

import json
import math
from importlib import resources
from pathlib import Path

import numpy as np

_M_PER_DEG_LAT = 111_000.0


def _deg(lat0):
    return 1.0 / (_M_PER_DEG_LAT * math.cos(math.radians(lat0))), 1.0 / _M_PER_DEG_LAT


def grid_streets(rows=15, cols=15, spacing=100.0, lon0=144.9631, lat0=-37.8136, seed=7,
                 drop_fraction=0.08, main_row=None, main_col=None):
    """A jittered street grid as (nodes, ways, segments).

    ``nodes`` maps OSM node id to (lon, lat). ``ways`` is a list of
    (node refs, tags). ``segments`` lists the kept intersection-to-intersection
    pieces as coordinate lists, used to scatter houses. One row and one column
    are tagged as secondary roads, some blocks get a shaped vertex so edges
    bend, a few segments are dropped to create dead ends, and a footway cuts
    diagonally across one block.
    """
    rng = np.random.default_rng(seed)
    dlon, dlat = _deg(lat0)
    main_row = rows // 2 if main_row is None else main_row
    main_col = cols // 2 if main_col is None else main_col
    jitter = rng.uniform(-8.0, 8.0, size=(rows, cols, 2))
    nodes = {}

    def nid(i, j):
        return 1000 + i * cols + j

    xy = {}
    for i in range(rows):
        for j in range(cols):
            x = (j - (cols - 1) / 2) * spacing + jitter[i, j, 0]
            y = (i - (rows - 1) / 2) * spacing + jitter[i, j, 1]
            xy[nid(i, j)] = (x, y)
            nodes[nid(i, j)] = (round(lon0 + x * dlon, 7), round(lat0 + y * dlat, 7))

    # candidate segments: horizontal then vertical
    segs = [((i, j), (i, j + 1), "row") for i in range(rows) for j in range(cols - 1)]
    segs += [((i, j), (i + 1, j), "col") for j in range(cols) for i in range(rows - 1)]
    n_drop = int(round(drop_fraction * len(segs)))
    dropped = set()
    # drop only segments away from the main roads and the grid border, keeping the grid connected
    order = rng.permutation(len(segs))
    adj = {nid(i, j): set() for i in range(rows) for j in range(cols)}
    for a, b, _ in segs:
        adj[nid(*a)].add(nid(*b))
        adj[nid(*b)].add(nid(*a))
    for k in order:
        if len(dropped) >= n_drop:
            break
        a, b, kind = segs[k]
        if kind == "row" and (a[0] == main_row or a[0] in (0, rows - 1)):
            continue
        if kind == "col" and (a[1] == main_col or a[1] in (0, cols - 1)):
            continue
        u, v = nid(*a), nid(*b)
        if len(adj[u]) <= 2 or len(adj[v]) <= 2:
            continue
        adj[u].discard(v)
        adj[v].discard(u)
        dropped.add(k)

    shape_id = 100000
    pieces = {}
    for k, (a, b, kind) in enumerate(segs):
        if k in dropped:
            continue
        u, v = nid(*a), nid(*b)
        refs = [u]
        if rng.random() < 0.3:
            (x1, y1), (x2, y2) = xy[u], xy[v]
            mx, my = (x1 + x2) / 2, (y1 + y2) / 2
            off = rng.uniform(-12.0, 12.0)
            nx, ny = -(y2 - y1) / spacing, (x2 - x1) / spacing
            x, y = mx + off * nx, my + off * ny
            nodes[shape_id] = (round(lon0 + x * dlon, 7), round(lat0 + y * dlat, 7))
            refs.append(shape_id)
            shape_id += 1
        refs.append(v)
        pieces[k] = refs

    ways = []
    segments = []
    way_id = 1
    for line in range(rows + cols):
        kind = "row" if line < rows else "col"
        idx = line if kind == "row" else line - rows
        main = idx == (main_row if kind == "row" else main_col)
        tags = {"highway": "secondary" if main else ("tertiary" if idx in (2, (rows if kind == "row" else cols) - 3) else "residential"),
                "name": f"{'Row' if kind == 'row' else 'Column'} {idx}"}
        run = []
        ks = [k for k, (a, _, kd) in enumerate(segs) if kd == kind and (a[0] if kind == "row" else a[1]) == idx]
        for k in ks + [None]:
            if k is None or k not in pieces:
                if run:
                    ways.append((run, dict(tags)))
                    way_id += 1
                run = []
                continue
            refs = pieces[k]
            run = refs if not run else run + refs[1:]
            segments.append([nodes[r] for r in refs])
    # a footway across one block (excluded by the default class filter)
    a, b = nid(3, 3), nid(4, 4)
    ways.append(([a, b], {"highway": "footway"}))
    return nodes, ways, segments


def osm_xml(nodes, ways) -> str:
    out = ['<?xml version="1.0" encoding="UTF-8"?>', '<osm version="0.6" generator="feedforge.fixtures">']
    for k in sorted(nodes):
        lon, lat = nodes[k]
        out.append(f'  <node id="{k}" lat="{lat:.7f}" lon="{lon:.7f}"/>')
    for w, (refs, tags) in enumerate(ways, start=1):
        out.append(f'  <way id="{w}">')
        out += [f'    <nd ref="{r}"/>' for r in refs]
        out += [f'    <tag k="{k}" v="{v}"/>' for k, v in sorted(tags.items())]
        out.append("  </way>")
    out.append("</osm>")
    return "\n".join(out) + "\n"


def house_points(segments, n=360, seed=11, lat0=-37.8136, setback=(10.0, 20.0)):
    """``n`` house coordinates scattered along street segments.

    Segments in the north-east quadrant are three times as likely to be
    picked, so demand is spatially uneven.
    """
    rng = np.random.default_rng(seed)
    dlon, dlat = _deg(lat0)
    mid = [(np.mean([p[0] for p in s]), np.mean([p[1] for p in s])) for s in segments]
    clon = np.mean([m[0] for m in mid])
    clat = np.mean([m[1] for m in mid])
    w = np.array([3.0 if (m[0] > clon and m[1] > clat) else 1.0 for m in mid])
    picks = rng.choice(len(segments), size=n, p=w / w.sum())
    pts = []
    for k in picks:
        s = segments[k]
        a, b = s[0], s[-1]
        t = rng.uniform(0.1, 0.9)
        side = 1.0 if rng.random() < 0.5 else -1.0
        off = side * rng.uniform(*setback)
        ex, ey = (b[0] - a[0]) / dlon, (b[1] - a[1]) / dlat
        L = math.hypot(ex, ey) or 1.0
        x = a[0] + t * (b[0] - a[0]) + off * (-ey / L) * dlon
        y = a[1] + t * (b[1] - a[1]) + off * (ex / L) * dlat
        pts.append((round(float(x), 7), round(float(y), 7)))
    return pts


def points_geojson(points) -> str:
    feats = [{"type": "Feature", "geometry": {"type": "Point", "coordinates": [lon, lat]}, "properties": {}}
             for lon, lat in points]
    return json.dumps({"type": "FeatureCollection", "features": feats}, indent=0) + "\n"


def desk_fixture():
    """15x15 grid and 360 houses: (osm text, houses GeoJSON text)."""
    nodes, ways, segments = grid_streets()
    return osm_xml(nodes, ways), points_geojson(house_points(segments))


def small_fixture():
    """2x5 grid of ten intersections with 30 houses."""
    nodes, ways, segments = grid_streets(rows=2, cols=5, spacing=80.0, seed=3, drop_fraction=0.0, main_row=-1,
                                         main_col=-1)
    ways = [w for w in ways if w[1]["highway"] != "footway"]
    return osm_xml(nodes, ways), points_geojson(house_points(segments, n=30, seed=5))


BUNDLED = {
    "grid15.osm": lambda: desk_fixture()[0],
    "grid15_houses.geojson": lambda: desk_fixture()[1],
    "small10.osm": lambda: small_fixture()[0],
    "small10_houses.geojson": lambda: small_fixture()[1],
}


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("feedforge") / "data" / name))


def write_bundled(directory: Path | None = None) -> None:
    directory = Path(directory) if directory else bundled_path("x").parent
    directory.mkdir(parents=True, exist_ok=True)
    for name, make in BUNDLED.items():
        (directory / name).write_text(make())
