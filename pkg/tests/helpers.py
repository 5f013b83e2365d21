"""Instance generators and independent oracles shared by the tests."""

from __future__ import annotations

import itertools
import math
import random

import numpy as np

from feedforge.electrify import Bus, ElectricalNetwork, Line, Load
from feedforge.geograph import CandidateEdge, CandidateGraph, GeoPoint, LocalFrame
from feedforge.synth import FeederEdge, FeederGraph


# -- synthesis instances ------------------------------------------------------

def make_graph(n_nodes, edges, costs=None):
    """CandidateGraph on nodes n0..n{k-1} with edges given as (a, b[, w]).

    ``w`` becomes both the class penalty and the composite weight, and every
    edge has unit length, so under alpha = (1, 0, 0) the edge cost is ``w``.
    """
    nodes = {f"n{i}": GeoPoint(0.0, 0.0, float(i), 0.0) for i in range(n_nodes)}
    out = []
    for k, e in enumerate(edges):
        a, b = e[0], e[1]
        w = float(e[2]) if len(e) > 2 else (1.0 if costs is None else float(costs[k]))
        out.append(CandidateEdge(f"n{a}", f"n{b}", (nodes[f"n{a}"], nodes[f"n{b}"]), "residential", 1.0, w, 0.0, w))
    return CandidateGraph(nodes, tuple(out))


def random_connected(rng: random.Random, n, extra, integer=False, lo=0.1, hi=10.0):
    """Random connected multigraph-free graph: a random spanning tree plus ``extra`` chords."""
    pairs = set()
    for i in range(1, n):
        pairs.add((rng.randrange(i), i))
    cap = n * (n - 1) // 2
    while len(pairs) < min(n - 1 + extra, cap):
        a, b = sorted(rng.sample(range(n), 2))
        pairs.add((a, b))
    edges = []
    for a, b in sorted(pairs):
        w = float(rng.randint(1, 5)) if integer else rng.uniform(lo, hi)
        edges.append((a, b, w))
    return make_graph(n, edges)


def brute_force(problem):
    """Cheapest source-rooted tree containing all terminals, by enumeration.

    Returns (cost, sorted edge ids); ties go to the lexicographically
    smallest edge list. Exponential: meant for graphs of at most ~12 edges
    beyond a tree.
    """
    g = problem.graph
    edges = g.edges
    best = None
    n = len(g.nodes)
    for r in range(0, n):
        for sub in itertools.combinations(range(len(edges)), r):
            adj = {}
            for k in sub:
                adj.setdefault(edges[k].u, []).append(edges[k].v)
                adj.setdefault(edges[k].v, []).append(edges[k].u)
            nodes = set(adj) | {problem.source}
            if len(nodes) != r + 1:
                continue
            seen = {problem.source}
            stack = [problem.source]
            while stack:
                x = stack.pop()
                for y in adj.get(x, ()):
                    if y not in seen:
                        seen.add(y)
                        stack.append(y)
            if seen != nodes or not problem.terminals <= seen:
                continue
            key = (problem.objective_of(sub), list(sub))
            if best is None or key < best:
                best = key
    return best


# -- geodesy oracle -----------------------------------------------------------

def vincenty(lon1, lat1, lon2, lat2):
    """Ellipsoidal (WGS84) inverse geodesic distance in metres."""
    a, f = 6378137.0, 1 / 298.257223563
    b = (1 - f) * a
    L = math.radians(lon2 - lon1)
    U1 = math.atan((1 - f) * math.tan(math.radians(lat1)))
    U2 = math.atan((1 - f) * math.tan(math.radians(lat2)))
    sU1, cU1, sU2, cU2 = math.sin(U1), math.cos(U1), math.sin(U2), math.cos(U2)
    lam = L
    for _ in range(200):
        sl, cl = math.sin(lam), math.cos(lam)
        ss = math.hypot(cU2 * sl, cU1 * sU2 - sU1 * cU2 * cl)
        if ss == 0:
            return 0.0
        cs = sU1 * sU2 + cU1 * cU2 * cl
        sig = math.atan2(ss, cs)
        sa = cU1 * cU2 * sl / ss
        c2a = 1 - sa * sa
        c2sm = cs - 2 * sU1 * sU2 / c2a if c2a else 0.0
        C = f / 16 * c2a * (4 + f * (4 - 3 * c2a))
        prev = lam
        lam = L + (1 - C) * f * sa * (sig + C * ss * (c2sm + C * cs * (-1 + 2 * c2sm * c2sm)))
        if abs(lam - prev) < 1e-13:
            break
    u2 = c2a * (a * a - b * b) / (b * b)
    A = 1 + u2 / 16384 * (4096 + u2 * (-768 + u2 * (320 - 175 * u2)))
    B = u2 / 1024 * (256 + u2 * (-128 + u2 * (74 - 47 * u2)))
    ds = B * ss * (c2sm + B / 4 * (cs * (-1 + 2 * c2sm * c2sm) - B / 6 * c2sm * (-3 + 4 * ss * ss) * (-3 + 4 * c2sm * c2sm)))
    return b * A * (sig - ds)


# -- power-flow instances and oracle -------------------------------------------

def radial_network(parents, z_pu, loads_pu, base_kv=11.0, base_mva=1.0, slack_v=1.0, rating=1.0):
    """Network with bus ``b{i}``, parent ``parents[i]`` (None for the slack),
    line impedance ``z_pu[i]`` (complex per unit) and load ``loads_pu[i]``."""
    zb = base_kv ** 2 / base_mva
    buses = tuple(Bus(f"b{i}", float(i), 0.0) for i in range(len(parents)))
    lines = []
    for i, p in enumerate(parents):
        if p is None:
            continue
        z = z_pu[i]
        lines.append(Line(f"L{i}", f"b{p}", f"b{i}", z.real * zb, z.imag * zb, rating, 1.0, "t", z.real * zb,
                          z.imag * zb))
    lds = tuple(Load(f"b{i}", s.real * base_mva, s.imag * base_mva, 1) for i, s in enumerate(loads_pu) if s != 0)
    total = math.fsum(ld.p_mw for ld in lds)
    return ElectricalNetwork(buses, "b0", slack_v, base_mva, base_kv, tuple(lines), lds, total)


def random_radial(rng: random.Random, n, max_load=0.2, zmin=1e-4, zmax=1e-3):
    parents = [None] + [rng.randrange(i) for i in range(1, n)]
    z = [0j] + [complex(rng.uniform(zmin, zmax), rng.uniform(zmin, zmax)) for _ in range(1, n)]
    loads = [0j] + [complex(rng.uniform(0, max_load), rng.uniform(0, max_load / 2)) for _ in range(1, n)]
    return parents, z, loads


def zbus_fixed_point(parents, z_pu, loads_pu, slack_v=1.0, tol=1e-15, max_iter=10_000):
    """Gauss fixed point V = V_s - Z_bus I(V) with Z_bus built from path impedances.

    Written independently of the sweep: Z_bus[i, j] is the impedance shared
    by the slack-to-i and slack-to-j paths.
    """
    n = len(parents)
    paths = []
    for i in range(n):
        p, path = i, set()
        while parents[p] is not None:
            path.add(p)
            p = parents[p]
        paths.append(path)
    Z = np.zeros((n - 1, n - 1), dtype=complex)
    for a in range(1, n):
        for b in range(1, n):
            Z[a - 1, b - 1] = sum(z_pu[k] for k in paths[a] & paths[b])
    S = np.array(loads_pu[1:], dtype=complex)
    V = np.full(n - 1, complex(slack_v))
    for _ in range(max_iter):
        I = np.conj(S / V)
        new = slack_v - Z @ I
        if np.max(np.abs(new - V)) < tol:
            V = new
            break
        V = new
    return np.r_[complex(slack_v), V]


def two_bus_closed_form(v1, z, s):
    """|V2| for a slack at |V1| feeding load S = P + jQ through Z = R + jX."""
    r, x = z.real, z.imag
    p, q = s.real, s.imag
    b = v1 * v1 - 2 * (r * p + x * q)
    disc = b * b - 4 * (abs(z) ** 2) * (abs(s) ** 2)
    return math.sqrt((b + math.sqrt(disc)) / 2)


def tree_feeder(xy, parents, classes=None, lengths=None, frame: LocalFrame | None = None):
    """FeederGraph with straight edges; node i is ``b{i}`` with parent ``parents[i]``.

    With a ``frame`` the nodes also get the matching lon/lat.
    """
    ids = [f"b{i}" for i in range(len(xy))]
    pts = frame_points(frame, xy) if frame else [GeoPoint(0.0, 0.0, float(x), float(y)) for x, y in xy]
    nodes = dict(zip(ids, pts))
    parent = {ids[0]: None}
    depth = {ids[0]: 0}
    edges = []
    for i, p in enumerate(parents):
        if p is None:
            continue
        parent[ids[i]] = ids[p]
        depth[ids[i]] = depth[ids[p]] + 1
        a, b = nodes[ids[p]], nodes[ids[i]]
        d = lengths[i] if lengths else math.hypot(a.x - b.x, a.y - b.y)
        cls = classes[i] if classes else "residential"
        edges.append(FeederEdge(i, ids[p], ids[i], (a, b), cls, d))
    return FeederGraph(nodes, tuple(edges), ids[0], parent, depth, frame)


def frame_points(frame: LocalFrame, xy):
    """GeoPoints at planar offsets ``xy`` (metres) from the frame origin."""
    pts = []
    for x, y in xy:
        lon, lat = frame.inverse(x, y)
        pts.append(GeoPoint(lon, lat, x, y))
    return pts


__all__ = [
    "brute_force", "frame_points", "make_graph", "radial_network", "random_connected", "random_radial",
    "tree_feeder", "two_bus_closed_form", "vincenty", "zbus_fixed_point",
]
