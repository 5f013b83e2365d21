"""Dreyfus-Wagner dynamic program, used as an independent optimality check."""

from __future__ import annotations

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from ..errors import SolverError
from .problem import IndexedGraph, SynthesisProblem, SynthesisSolution, build_solution

MAX_TERMINALS = 12


def steiner_oracle(problem: SynthesisProblem) -> SynthesisSolution:
    """Minimum Steiner tree over the source and required nodes by subset DP.

    ``dp[S][v]`` is the cheapest tree spanning terminal subset ``S`` plus node
    ``v``. Runs in O(3^k n + 2^k n^2) for k non-source terminals, so the
    terminal count is capped at 12.
    """
    g = IndexedGraph(problem)
    if len(g.terminals) > MAX_TERMINALS:
        raise SolverError(f"steiner_oracle handles at most {MAX_TERMINALS} terminals, got {len(g.terminals)}")
    if len(g.terminals) == 1:
        return build_solution(problem, [], proven_optimal=True, gap=0.0, solver="dreyfus-wagner")

    # cheapest edge per node pair (parallel edges collapse)
    pair_edge = {}
    for k in range(g.m):
        a, b = sorted((g.eu[k], g.ev[k]))
        if a == b:
            continue
        cur = pair_edge.get((a, b))
        if cur is None or (g.cost[k], k) < (g.cost[cur], cur):
            pair_edge[(a, b)] = k
    rows, cols, vals = [], [], []
    for (a, b), k in pair_edge.items():
        rows += [a, b]
        cols += [b, a]
        vals += [g.cost[k], g.cost[k]]
    # zero-cost edges would vanish from a sparse matrix; shift them to a tiny positive weight
    vals = [v if v > 0 else 1e-300 for v in vals]
    mat = csr_matrix((vals, (rows, cols)), shape=(g.n, g.n))
    dist, pred = dijkstra(mat, directed=False, return_predecessors=True)

    root = g.source
    others = [t for t in g.terminals if t != root]
    if not np.all(np.isfinite(dist[root, others])):
        raise SolverError("required nodes are not connected to the source in the candidate graph")
    k = len(others)
    full = (1 << k) - 1
    n = g.n
    dp = np.full((full + 1, n), np.inf)
    via = np.full((full + 1, n), -1, dtype=np.int64)  # node u where the subtree for S joins v's path
    split = {}  # (S, u) -> submask used at u
    for i, t in enumerate(others):
        dp[1 << i] = dist[t]
        via[1 << i] = t
    for mask in range(1, full + 1):
        if mask & (mask - 1) == 0:
            continue
        low = mask & -mask
        g_best = np.full(n, np.inf)
        g_arg = np.zeros(n, dtype=np.int64)
        sub = (mask - 1) & mask
        while sub:
            if sub & low:
                cand = dp[sub] + dp[mask ^ sub]
                better = cand < g_best
                g_best = np.where(better, cand, g_best)
                g_arg = np.where(better, sub, g_arg)
            sub = (sub - 1) & mask
        total = dist + g_best[None, :]
        u = np.argmin(total, axis=1)
        dp[mask] = total[np.arange(n), u]
        via[mask] = u
        for node in set(u.tolist()):
            split[(mask, node)] = int(g_arg[node])

    edges = set()

    def path_edges(a, b):
        while b != a:
            p = pred[a, b]
            x, y = sorted((p, b))
            edges.add(pair_edge[(x, y)])
            b = p

    def rebuild(mask, v):
        u = int(via[mask, v])
        path_edges(v, u)
        if mask & (mask - 1) == 0:
            return
        sub = split[(mask, u)]
        rebuild(sub, u)
        rebuild(mask ^ sub, u)

    rebuild(full, root)
    tree = _mst_prune(g, edges)
    return build_solution(problem, tree, proven_optimal=True, gap=0.0, solver="dreyfus-wagner",
                          stats={"dp_value": float(dp[full, root])})


def _mst_prune(g: IndexedGraph, edges):
    """Kruskal on the rebuilt edge union, then strip non-terminal leaves."""
    parent = list(range(g.n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    tree = set()
    for k in sorted(edges, key=lambda k: (g.cost[k], k)):
        a, b = find(g.eu[k]), find(g.ev[k])
        if a != b:
            parent[a] = b
            tree.add(k)
    return g.prune(tree)
