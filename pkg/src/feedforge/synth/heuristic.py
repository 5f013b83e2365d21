"""Path-joining Steiner heuristic with key-path exchange local search."""

from __future__ import annotations

import math

from ..errors import SolverError
from .problem import IndexedGraph, SynthesisProblem, SynthesisSolution, build_solution


def _grow(g: IndexedGraph, edge_ok=None):
    in_tree = {g.source}
    tree = set()
    remaining = set(g.terminals) - in_tree
    while remaining:
        dist, pred = g.dijkstra(sorted(in_tree), edge_ok)
        t = min(remaining, key=lambda i: (dist[i], i))
        if math.isinf(dist[t]):
            return None
        i = t
        while i not in in_tree:
            k = pred[i]
            tree.add(k)
            in_tree.add(i)
            i = g.other(k, i)
        remaining -= in_tree
    return g.prune(tree)


def _key_paths(g: IndexedGraph, tree):
    """Split a tree into maximal paths whose interior nodes are degree-2 Steiner nodes."""
    inc = {}
    for k in tree:
        inc.setdefault(g.eu[k], []).append(k)
        inc.setdefault(g.ev[k], []).append(k)
    terms = set(g.terminals)

    def key(i):
        return i in terms or len(inc[i]) != 2

    seen = set()
    paths = []
    for start in sorted(inc):
        if not key(start):
            continue
        for k0 in sorted(inc[start]):
            if k0 in seen:
                continue
            path = [k0]
            seen.add(k0)
            cur = g.other(k0, start)
            interior = []
            while not key(cur):
                interior.append(cur)
                k = next(e for e in inc[cur] if e not in seen)
                seen.add(k)
                path.append(k)
                cur = g.other(k, cur)
            paths.append((path, interior))
    return paths


def _exchange_once(g: IndexedGraph, tree, edge_ok=None):
    for path, interior in sorted(_key_paths(g, tree), key=lambda p: min(p[0])):
        rest = tree - set(path)
        side = {g.source}
        adj = {}
        for k in rest:
            adj.setdefault(g.eu[k], []).append(k)
            adj.setdefault(g.ev[k], []).append(k)
        stack = [g.source]
        while stack:
            i = stack.pop()
            for k in adj.get(i, ()):
                j = g.other(k, i)
                if j not in side:
                    side.add(j)
                    stack.append(j)
        # the other side: tree nodes not reachable from the source after removal
        nodes = set()
        for k in rest:
            nodes.add(g.eu[k])
            nodes.add(g.ev[k])
        ends = {g.eu[path[0]], g.ev[path[0]], g.eu[path[-1]], g.ev[path[-1]]} - set(interior)
        nodes |= ends
        other = nodes - side
        if not other:
            continue
        dist, pred = g.dijkstra(sorted(side), edge_ok)
        best = min(other, key=lambda i: (dist[i], i))
        old = math.fsum(g.cost[k] for k in path)
        if dist[best] < old - 1e-12 * max(1.0, old):
            new = set(rest)
            i = best
            while i not in side:
                k = pred[i]
                new.add(k)
                i = g.other(k, i)
            new = g.minimal_tree(new)
            if new is not None and math.fsum(g.cost[k] for k in new) < math.fsum(g.cost[k] for k in tree):
                return new
    return None


def steiner_heuristic(g: IndexedGraph, edge_ok=None):
    """Edge set of a heuristic Steiner tree (None if terminals are disconnected)."""
    tree = _grow(g, edge_ok)
    if tree is None:
        return None
    while True:
        better = _exchange_once(g, tree, edge_ok)
        if better is None:
            return tree
        tree = better


def solve_heuristic(problem: SynthesisProblem) -> SynthesisSolution:
    """Grow a tree from the source by repeatedly attaching the nearest unreached
    terminal along a shortest path, prune Steiner leaves, then exchange key
    paths (removed and reconnected by a cheaper shortest path) until no move
    improves. Radiality is kept at every step."""
    g = IndexedGraph(problem)
    tree = steiner_heuristic(g)
    if tree is None:
        raise SolverError("required nodes are not connected to the source in the candidate graph")
    # cost <= 2 * optimum, so (cost - optimum) / cost <= 1/2
    gap = 0.5 if tree else 0.0
    return build_solution(problem, tree, proven_optimal=False, gap=gap, solver="heuristic")
