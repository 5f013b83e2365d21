"""
Exact, heuristic and subset-DP solvers side by side
===================================================

Three ways to pick the feeder tree: the LP-bounded branch and bound, the
path-joining heuristic with edge exchange, and the Dreyfus-Wagner subset
recursion used as an independent oracle. On random graphs we compare their
objectives and running times.
"""

import random
import time

import numpy as np

from feedforge.geograph import CandidateEdge, CandidateGraph, GeoPoint
from feedforge.synth import SynthesisProblem, solve_exact, solve_heuristic, steiner_oracle, verify_solution


def random_graph(rng, n, extra):
    nodes = {f"n{i}": GeoPoint(0.0, 0.0, rng.uniform(0, 1000), rng.uniform(0, 1000)) for i in range(n)}
    pairs = {(rng.randrange(i), i) for i in range(1, n)}
    while len(pairs) < min(n - 1 + extra, n * (n - 1) // 2):
        a, b = sorted(rng.sample(range(n), 2))
        pairs.add((a, b))
    edges = []
    for a, b in sorted(pairs):
        pa, pb = nodes[f"n{a}"], nodes[f"n{b}"]
        d = float(np.hypot(pa.x - pb.x, pa.y - pb.y))
        w = rng.choice([1.0, 1.5, 2.0, 4.0])
        edges.append(CandidateEdge(f"n{a}", f"n{b}", (pa, pb), "residential", d, w, 0.0, w))
    return CandidateGraph(nodes, tuple(edges))


rng = random.Random(0)
rows = []
for trial in range(20):
    g = random_graph(rng, rng.randint(15, 40), rng.randint(10, 60))
    ids = list(g.nodes)
    p = SynthesisProblem(g, ids[0], frozenset(rng.sample(ids[1:], 6)))
    row = []
    for solve in (solve_exact, solve_heuristic, steiner_oracle):
        t0 = time.perf_counter()
        sol = solve(p)
        row.append((sol.objective, time.perf_counter() - t0))
        assert verify_solution(p, sol).ok
    rows.append(row)

obj = np.array([[r[0] for r in row] for row in rows])
sec = np.array([[r[1] for r in row] for row in rows])

###############################################################################
# The exact solver and the oracle agree; the heuristic is never better

print("max |exact - oracle| / oracle:", np.max(np.abs(obj[:, 0] - obj[:, 2]) / obj[:, 2]))
ratio = obj[:, 1] / obj[:, 0]
print(f"heuristic / exact: mean {ratio.mean():.4f}, worst {ratio.max():.4f}, "
      f"optimal in {np.sum(ratio == 1.0)} of {len(ratio)} cases")

###############################################################################
# Time per instance

for name, col in zip(("exact", "heuristic", "oracle"), sec.T):
    print(f"{name:<10} median {np.median(col) * 1e3:8.2f} ms   max {col.max() * 1e3:8.2f} ms")
