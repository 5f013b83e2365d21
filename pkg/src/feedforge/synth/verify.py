"""Independent constraint-by-constraint check of a synthesis solution."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass

from .problem import SynthesisProblem, SynthesisSolution

_TOL = 1e-9


@dataclass(frozen=True)
class Violation:
    constraint: str
    where: tuple
    detail: str

    def __str__(self):
        return f"{self.constraint} at {self.where}: {self.detail}"


@dataclass(frozen=True)
class VerificationReport:
    violations: tuple[Violation, ...]
    objective_recomputed: float

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_solution(problem: SynthesisProblem, sol: SynthesisSolution) -> VerificationReport:
    g = problem.graph
    edges = g.edges
    out = []

    def bad(constraint, where, detail):
        out.append(Violation(constraint, where, detail))

    y = {}
    for n in g.nodes:
        v = sol.y.get(n)
        if v not in (0, 1):
            bad("binary-y", (n,), f"y={v!r}")
        y[n] = 1 if v == 1 else 0
    z = {}
    for k in range(len(edges)):
        v = sol.z.get(k)
        if v not in (0, 1):
            bad("binary-z", (k,), f"z={v!r}")
        z[k] = 1 if v == 1 else 0

    for k, e in enumerate(edges):
        if z[k] > y[e.u]:
            bad("coupling", (e.u, e.v), f"z=1 but y[{e.u}]=0")
        if z[k] > y[e.v]:
            bad("coupling", (e.u, e.v), f"z=1 but y[{e.v}]=0")

    for n in sorted(problem.terminals):
        if y[n] != 1:
            bad("required", (n,), "required node not retained")

    sz, sy = sum(z.values()), sum(y.values())
    if sz != sy - 1:
        bad("tree-cardinality", (), f"sum z = {sz}, sum y - 1 = {sy - 1}")

    inflow = defaultdict(list)
    outflow = defaultdict(list)
    for (k, tail, head), val in sol.f.items():
        if not 0 <= k < len(edges) or {tail, head} != {edges[k].u, edges[k].v}:
            bad("arc", (k, tail, head), "flow on an arc that is not in the candidate graph")
            continue
        if val < -_TOL:
            bad("flow-capacity", (k, tail, head), f"negative flow {val}")
        if val > problem.big_m * z[k] + _TOL:
            bad("flow-capacity", (k, tail, head), f"flow {val} exceeds M*z = {problem.big_m * z[k]}")
        outflow[tail].append(val)
        inflow[head].append(val)

    s = problem.source
    for n in g.nodes:
        net_in = math.fsum(inflow[n]) - math.fsum(outflow[n])
        if n == s:
            want = sy - y[s]
            if abs(-net_in - want) > _TOL:
                bad("flow-source", (n,), f"net outflow {-net_in} != {want}")
        elif abs(net_in - y[n]) > _TOL:
            bad("flow-balance", (n,), f"net inflow {net_in} != y = {y[n]}")

    recomputed = problem.objective_of(k for k, v in z.items() if v)
    if abs(recomputed - sol.objective) > 1e-9 * max(1.0, abs(recomputed)):
        bad("objective", (), f"reported {sol.objective}, recomputed {recomputed}")
    return VerificationReport(tuple(out), recomputed)
