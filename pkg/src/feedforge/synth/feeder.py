"""The selected radial feeder as a rooted tree."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from ..errors import RejectedSolutionError, SchemaError
from ..geograph import GeoPoint, LocalFrame
from .problem import SynthesisProblem, SynthesisSolution
from .verify import verify_solution


@dataclass(frozen=True)
class FeederEdge:
    """Candidate edge ``id`` oriented from ``parent`` to ``child``."""

    id: int
    parent: str
    child: str
    geometry: tuple[GeoPoint, ...]
    road_class: str
    d: float


@dataclass(frozen=True)
class FeederGraph:
    nodes: Mapping[str, GeoPoint]
    edges: tuple[FeederEdge, ...]
    root: str
    parent: Mapping[str, str | None]
    depth: Mapping[str, int]
    frame: LocalFrame | None = None

    def children(self) -> dict[str, list[str]]:
        out = {n: [] for n in self.nodes}
        for e in self.edges:
            out[e.parent].append(e.child)
        return out

    def degree(self, n: str) -> int:
        return len([e for e in self.edges if n in (e.parent, e.child)])


def to_feeder_graph(problem: SynthesisProblem, sol: SynthesisSolution) -> FeederGraph:
    report = verify_solution(problem, sol)
    if not report.ok:
        raise RejectedSolutionError(f"solution violates {len(report.violations)} constraint(s): "
                                    f"{report.violations[0]}", report.violations)
    g = problem.graph
    adj = {}
    for k in sol.selected_edges:
        e = g.edges[k]
        adj.setdefault(e.u, []).append((k, e.v))
        adj.setdefault(e.v, []).append((k, e.u))
    parent = {problem.source: None}
    depth = {problem.source: 0}
    order = [problem.source]
    edges = []
    for n in order:
        for k, nb in sorted(adj.get(n, ())):
            if nb in parent:
                continue
            parent[nb] = n
            depth[nb] = depth[n] + 1
            order.append(nb)
            e = g.edges[k]
            geom = e.geometry if e.u == n else tuple(reversed(e.geometry))
            edges.append(FeederEdge(k, n, nb, geom, e.road_class, e.d))
    kept = {n for n, v in sol.y.items() if v}
    if set(order) != kept:
        stray = sorted(kept - set(order))
        raise RejectedSolutionError(f"retained nodes unreachable from the source: {stray}")
    nodes = {n: g.nodes[n] for n in order}
    return FeederGraph(nodes, tuple(edges), problem.source, parent, depth, g.frame)


def feeder_to_dict(feeder: FeederGraph) -> dict:
    return {
        "root": feeder.root,
        "frame": None if feeder.frame is None else [feeder.frame.lon0, feeder.frame.lat0],
        "nodes": [
            {"id": n, "lon": p.lon, "lat": p.lat, "x": p.x, "y": p.y,
             "parent": feeder.parent[n], "depth": feeder.depth[n]}
            for n, p in feeder.nodes.items()
        ],
        "edges": [
            {"id": e.id, "parent": e.parent, "child": e.child, "class": e.road_class, "d": e.d,
             "geometry": [[p.lon, p.lat, p.x, p.y] for p in e.geometry]}
            for e in feeder.edges
        ],
    }


def feeder_from_dict(doc: Mapping) -> FeederGraph:
    try:
        nodes = {n["id"]: GeoPoint(n["lon"], n["lat"], n["x"], n["y"]) for n in doc["nodes"]}
        parent = {n["id"]: n["parent"] for n in doc["nodes"]}
        depth = {n["id"]: int(n["depth"]) for n in doc["nodes"]}
        edges = tuple(
            FeederEdge(int(e["id"]), e["parent"], e["child"], tuple(GeoPoint(*v) for v in e["geometry"]),
                       e["class"], float(e["d"]))
            for e in doc["edges"]
        )
        frame = doc.get("frame")
        return FeederGraph(nodes, edges, doc["root"], parent, depth,
                           None if frame is None else LocalFrame(frame[0], frame[1]))
    except KeyError as exc:
        raise SchemaError(f"feeder document missing field {exc}") from None
