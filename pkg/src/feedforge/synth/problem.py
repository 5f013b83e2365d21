"""Synthesis problem and solution containers plus their JSON forms."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from ..errors import ConfigError, SchemaError, SolverError
from ..geograph import CandidateEdge, CandidateGraph


def edge_cost(problem: "SynthesisProblem", edge: CandidateEdge) -> float:
    """alpha_geo * c_geo + alpha_top + alpha_elec * d for one candidate edge.

    ``c_geo`` is the edge's composite score ``w``; with the default
    ``lambda_d = 0`` that score carries no length term, so length is only
    charged through ``alpha_elec``.
    """
    return problem.alpha_geo * edge.w + problem.alpha_top + problem.alpha_elec * edge.d


@dataclass(frozen=True)
class SynthesisProblem:
    graph: CandidateGraph
    source: str
    required: frozenset = frozenset()
    alpha_geo: float = 1.0
    alpha_top: float = 0.5
    alpha_elec: float = 0.005
    big_m: int | None = None
    costs: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "required", frozenset(self.required))
        if self.source not in self.graph.nodes:
            raise ConfigError(f"source {self.source!r} is not a candidate node")
        missing = sorted(r for r in self.required if r not in self.graph.nodes)
        if missing:
            raise ConfigError(f"required nodes not in candidate graph: {missing}")
        alphas = (self.alpha_geo, self.alpha_top, self.alpha_elec)
        if any(not math.isfinite(a) or a < 0 for a in alphas):
            raise ConfigError(f"alpha weights must be finite and >= 0, got {alphas}")
        if all(a == 0 for a in alphas):
            raise ConfigError("alpha weights must not all be zero")
        if self.big_m is None:
            object.__setattr__(self, "big_m", len(self.graph.nodes) - 1)
        object.__setattr__(self, "costs", tuple(edge_cost(self, e) for e in self.graph.edges))

    @property
    def terminals(self) -> frozenset:
        return self.required | {self.source}

    def objective_of(self, edge_ids: Iterable[int]) -> float:
        return math.fsum(self.costs[k] for k in sorted(edge_ids))


@dataclass(frozen=True)
class SynthesisSolution:
    y: Mapping[str, int]
    z: Mapping[int, int]
    f: Mapping[tuple, float]  # (edge id, tail, head) -> flow
    objective: float
    proven_optimal: bool
    gap: float
    solver: str = ""
    stats: Mapping = field(default_factory=dict, compare=False)

    @property
    def selected_edges(self) -> tuple[int, ...]:
        return tuple(sorted(k for k, v in self.z.items() if v))

    @property
    def selected_nodes(self) -> tuple[str, ...]:
        return tuple(n for n, v in self.y.items() if v)


class IndexedGraph:
    """Integer-indexed view of a problem's candidate graph used by the solvers."""

    def __init__(self, problem: SynthesisProblem):
        self.problem = problem
        self.ids = sorted(problem.graph.nodes)
        self.index = {n: i for i, n in enumerate(self.ids)}
        self.n = len(self.ids)
        self.m = len(problem.graph.edges)
        self.eu = [self.index[e.u] for e in problem.graph.edges]
        self.ev = [self.index[e.v] for e in problem.graph.edges]
        self.cost = list(problem.costs)
        self.adj = [[] for _ in range(self.n)]
        for k in range(self.m):
            self.adj[self.eu[k]].append((self.ev[k], k))
            self.adj[self.ev[k]].append((self.eu[k], k))
        self.source = self.index[problem.source]
        self.terminals = sorted(self.index[t] for t in problem.terminals)

    def other(self, k: int, i: int) -> int:
        return self.ev[k] if self.eu[k] == i else self.eu[k]

    def dijkstra(self, sources: Iterable[int], edge_ok=None):
        """Multi-source shortest paths; returns (dist, pred_edge)."""
        dist = [math.inf] * self.n
        pred = [-1] * self.n
        heap = []
        for s in sources:
            dist[s] = 0.0
            heap.append((0.0, s))
        heapq.heapify(heap)
        done = [False] * self.n
        while heap:
            d, i = heapq.heappop(heap)
            if done[i]:
                continue
            done[i] = True
            for j, k in self.adj[i]:
                if edge_ok is not None and not edge_ok[k]:
                    continue
                nd = d + self.cost[k]
                if nd < dist[j]:
                    dist[j] = nd
                    pred[j] = k
                    heapq.heappush(heap, (nd, j))
        return dist, pred

    def minimal_tree(self, edge_ids: Iterable[int]):
        """Spanning tree of the source component of ``edge_ids``, stripped of
        non-terminal leaves. Returns None when a terminal is unreachable."""
        allowed = sorted(set(edge_ids))
        adj = {}
        for k in allowed:
            adj.setdefault(self.eu[k], []).append(k)
            adj.setdefault(self.ev[k], []).append(k)
        seen = {self.source}
        tree = set()
        queue = [self.source]
        for i in queue:
            for k in adj.get(i, ()):
                j = self.other(k, i)
                if j not in seen:
                    seen.add(j)
                    tree.add(k)
                    queue.append(j)
        if any(t not in seen for t in self.terminals):
            return None
        return self.prune(tree)

    def prune(self, tree: Iterable[int]) -> set:
        tree = set(tree)
        terms = set(self.terminals)
        deg = {}
        inc = {}
        for k in tree:
            for i in (self.eu[k], self.ev[k]):
                deg[i] = deg.get(i, 0) + 1
                inc.setdefault(i, set()).add(k)
        stack = [i for i, d in deg.items() if d == 1 and i not in terms]
        while stack:
            i = stack.pop()
            if deg.get(i, 0) != 1 or i in terms:
                continue
            (k,) = inc[i]
            tree.discard(k)
            deg[i] = 0
            inc[i].clear()
            j = self.other(k, i)
            deg[j] -= 1
            inc[j].discard(k)
            if deg[j] == 1 and j not in terms:
                stack.append(j)
        return tree


def build_solution(problem: SynthesisProblem, edge_ids: Iterable[int], *, proven_optimal: bool,
                   gap: float = 0.0, solver: str = "", stats=None) -> SynthesisSolution:
    """Turn a source-rooted tree (given by candidate edge ids) into (y, z, f).

    Flow on the arc towards a child equals the number of retained nodes in
    that child's subtree, which is what unit-demand single-commodity flow
    from the source produces on a tree.
    """
    edge_ids = sorted(set(edge_ids))
    g = problem.graph
    adj = {}
    for k in edge_ids:
        e = g.edges[k]
        adj.setdefault(e.u, []).append((e.v, k))
        adj.setdefault(e.v, []).append((e.u, k))
    parent = {problem.source: None}
    order = [problem.source]
    for n in order:
        for nb, k in adj.get(n, ()):
            if nb not in parent:
                parent[nb] = (n, k)
                order.append(nb)
    if len(order) != len(edge_ids) + 1:
        raise SolverError("selected edges do not form a tree rooted at the source")
    size = {n: 1 for n in order}
    for n in reversed(order[1:]):
        size[parent[n][0]] += size[n]
    y = {n: int(n in parent) for n in g.nodes}
    z = {k: 0 for k in range(len(g.edges))}
    for k in edge_ids:
        z[k] = 1
    f = {}
    for n in order[1:]:
        p, k = parent[n]
        f[(k, p, n)] = float(size[n])
    return SynthesisSolution(y, z, f, problem.objective_of(edge_ids), proven_optimal, gap, solver,
                             dict(stats or {}))


# -- JSON ---------------------------------------------------------------------

def problem_to_dict(problem: SynthesisProblem) -> dict:
    return {
        "source": problem.source,
        "required": sorted(problem.required),
        "alpha_geo": problem.alpha_geo,
        "alpha_top": problem.alpha_top,
        "alpha_elec": problem.alpha_elec,
        "big_m": problem.big_m,
        "nodes": list(problem.graph.nodes),
        "edges": [[e.u, e.v, c] for e, c in zip(problem.graph.edges, problem.costs)],
    }


def problem_from_dict(doc: Mapping, graph: CandidateGraph) -> SynthesisProblem:
    try:
        problem = SynthesisProblem(graph, doc["source"], frozenset(doc["required"]), doc["alpha_geo"],
                                   doc["alpha_top"], doc["alpha_elec"], doc.get("big_m"))
    except KeyError as exc:
        raise SchemaError(f"synthesis problem missing field {exc}") from None
    edges = doc.get("edges")
    if edges is not None and [(u, v) for u, v, _ in edges] != [(e.u, e.v) for e in graph.edges]:
        raise SchemaError("synthesis problem edges do not match the candidate graph")
    return problem


def solution_to_dict(sol: SynthesisSolution, problem: SynthesisProblem) -> dict:
    edges = problem.graph.edges
    return {
        "objective": sol.objective,
        "proven_optimal": sol.proven_optimal,
        "gap": sol.gap,
        "solver": sol.solver,
        "y": {n: sol.y[n] for n in problem.graph.nodes if n in sol.y},
        "z": [[k, edges[k].u, edges[k].v, sol.z.get(k, 0)] for k in range(len(edges))],
        "f": [[k, t, h, v] for (k, t, h), v in sorted(sol.f.items())],
    }


def solution_from_dict(doc: Mapping) -> SynthesisSolution:
    try:
        return SynthesisSolution(
            y={str(n): int(v) for n, v in doc["y"].items()},
            z={int(k): int(v) for k, _, _, v in doc["z"]},
            f={(int(k), str(t), str(h)): float(v) for k, t, h, v in doc["f"]},
            objective=float(doc["objective"]),
            proven_optimal=bool(doc["proven_optimal"]),
            gap=float(doc["gap"]),
            solver=doc.get("solver", ""),
        )
    except KeyError as exc:
        raise SchemaError(f"synthesis solution missing field {exc}") from None
