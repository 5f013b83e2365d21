"""Structural summary of a generated feeder."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields

from .electrify import ElectricalNetwork
from .synth.feeder import FeederGraph


@dataclass(frozen=True)
class StructuralSummary:
    n_buses: int
    n_branches: int
    total_line_km: float
    mean_line_km: float
    max_line_km: float
    n_load_points: int
    total_households: int
    mean_households_per_load_point: float
    feeder_depth_hops: int
    mean_depth_hops: float
    root_branches: int
    n_leaves: int
    n_branching_nodes: int
    peak_load_mw: float


def structural_summary(feeder: FeederGraph, net: ElectricalNetwork) -> StructuralSummary:
    """Counts and length statistics of the feeder tree.

    Mean depth averages over non-root buses. Branching nodes are non-root
    nodes with three or more incident feeder edges; the root's fan-out is
    ``root_branches``. Means over an empty set are reported as 0.
    """
    deg = {n: 0 for n in feeder.nodes}
    for e in feeder.edges:
        deg[e.parent] += 1
        deg[e.child] += 1
    lengths = [ln.length_km for ln in net.lines]
    total_km = math.fsum(lengths)
    depths = [d for n, d in feeder.depth.items() if n != feeder.root]
    loads = [ld for ld in net.loads]
    households = sum(ld.households for ld in loads)
    return StructuralSummary(
        n_buses=len(net.buses),
        n_branches=len(net.lines),
        total_line_km=total_km,
        mean_line_km=total_km / len(lengths) if lengths else 0.0,
        max_line_km=max(lengths, default=0.0),
        n_load_points=len(loads),
        total_households=households,
        mean_households_per_load_point=households / len(loads) if loads else 0.0,
        feeder_depth_hops=max(feeder.depth.values(), default=0),
        mean_depth_hops=math.fsum(depths) / len(depths) if depths else 0.0,
        root_branches=deg[feeder.root],
        n_leaves=sum(1 for n, d in deg.items() if n != feeder.root and d == 1),
        n_branching_nodes=sum(1 for n, d in deg.items() if n != feeder.root and d >= 3),
        peak_load_mw=math.fsum(ld.p_mw for ld in loads),
    )


def summary_to_dict(summary: StructuralSummary) -> dict:
    return asdict(summary)


def summary_from_dict(doc: dict) -> StructuralSummary:
    return StructuralSummary(**{f.name: doc[f.name] for f in fields(StructuralSummary)})


def summary_to_json(summary: StructuralSummary) -> str:
    return json.dumps(summary_to_dict(summary), indent=2) + "\n"


_LABELS = {
    "n_buses": "Number of buses",
    "n_branches": "Number of branches",
    "total_line_km": "Total line length (km)",
    "mean_line_km": "Mean line length (km)",
    "max_line_km": "Max line length (km)",
    "n_load_points": "Number of load points",
    "total_households": "Total households",
    "mean_households_per_load_point": "Mean households per load point",
    "feeder_depth_hops": "Feeder depth (hops)",
    "mean_depth_hops": "Mean depth (hops)",
    "root_branches": "Root branches",
    "n_leaves": "Number of leaves",
    "n_branching_nodes": "Number of branching nodes",
    "peak_load_mw": "Peak load (MW)",
}


def summary_table(summary: StructuralSummary) -> str:
    rows = []
    for f in fields(StructuralSummary):
        v = getattr(summary, f.name)
        rows.append((_LABELS[f.name], f"{v:.3f}" if isinstance(v, float) else str(v)))
    width = max(len(label) for label, _ in rows)
    vwidth = max(len(v) for _, v in rows)
    return "".join(f"{label:<{width}}  {v:>{vwidth}}\n" for label, v in rows)
