"""Exact radial feeder synthesis by LP-bounded branch-and-bound.

The objective only charges selected edges, so the optimum of the
single-commodity-flow model is a minimum Steiner tree over the source and
the required nodes. Bounds come from the LP relaxation of the directed
multi-commodity flow model (one unit of flow from the source to every other
terminal, each arc flow capped by the arc's selection variable), which has
the same integer solutions but a much tighter relaxation than the big-M
single-commodity one. Branching is on undirected edge variables.

Among optimal trees the one with the lexicographically smallest sorted list
of edge ids is returned; that is settled after the optimum is known by
deciding edges in id order.
"""

from __future__ import annotations

import math
import time

import highspy
import numpy as np
import scipy.sparse as sp

from ..errors import SolverError
from .heuristic import steiner_heuristic
from .problem import IndexedGraph, SynthesisProblem, SynthesisSolution, build_solution

DEFAULT_TIMEOUT_S = 120.0
_INT_TOL = 1e-6


class _Timeout(Exception):
    pass


def _reduce(g: IndexedGraph):
    """Active edge mask after stripping non-terminal pendant nodes."""
    terms = set(g.terminals)
    alive = [True] * g.m
    deg = [len(a) for a in g.adj]
    stack = [i for i in range(g.n) if deg[i] <= 1 and i not in terms]
    gone = [False] * g.n
    while stack:
        i = stack.pop()
        if gone[i] or i in terms or deg[i] > 1:
            continue
        gone[i] = True
        for j, k in g.adj[i]:
            if alive[k]:
                alive[k] = False
                deg[i] -= 1
                deg[j] -= 1
                if deg[j] <= 1 and j not in terms and not gone[j]:
                    stack.append(j)
    return alive


class SteinerLP:
    """Directed multi-commodity flow relaxation over the active edges.

    Variables are laid out as ``[z (m), x (2m), f_1 (2m), ..., f_K (2m)]``.
    Only the bounds on ``z`` change between solves.
    """

    def __init__(self, g: IndexedGraph, active):
        self.g = g
        self.edges = [k for k in range(g.m) if active[k]]
        self.pos = {k: p for p, k in enumerate(self.edges)}
        nodes = sorted({g.eu[k] for k in self.edges} | {g.ev[k] for k in self.edges} | set(g.terminals))
        loc = {i: p for p, i in enumerate(nodes)}
        n, m = len(nodes), len(self.edges)
        self.m = m
        root = loc[g.source]
        terms = [loc[t] for t in g.terminals if t != g.source]
        kk = len(terms)
        a = 2 * m
        tail = np.empty(a, dtype=np.int64)
        head = np.empty(a, dtype=np.int64)
        for p, k in enumerate(self.edges):
            tail[2 * p], head[2 * p] = loc[g.eu[k]], loc[g.ev[k]]
            tail[2 * p + 1], head[2 * p + 1] = loc[g.ev[k]], loc[g.eu[k]]
        nvar = m + a + kk * a
        self.nvar = nvar
        arcs = np.arange(a)
        inc = sp.csr_matrix((np.r_[np.ones(a), -np.ones(a)], (np.r_[head, tail], np.r_[arcs, arcs])), shape=(n, a))
        indeg = sp.csr_matrix((np.ones(a), (head, arcs)), shape=(n, a))

        def block(mat, at):
            rows = mat.shape[0]
            parts = []
            if at:
                parts.append(sp.csr_matrix((rows, at)))
            parts.append(mat)
            if nvar - at - mat.shape[1]:
                parts.append(sp.csr_matrix((rows, nvar - at - mat.shape[1])))
            return sp.hstack(parts, format="csr")

        eq, beq = [], []
        # z_e = x_uv + x_vu
        link = sp.hstack([sp.identity(m, format="csr"),
                          -sp.csr_matrix((np.ones(a), (arcs // 2, arcs)), shape=(m, a))], format="csr")
        eq.append(block(link, 0))
        beq.append(np.zeros(m))
        for c, t in enumerate(terms):
            eq.append(block(inc, m + a + c * a))
            rhs = np.zeros(n)
            rhs[t] = 1.0
            rhs[root] = -1.0
            beq.append(rhs)
        is_term = np.zeros(n, dtype=bool)
        is_term[terms] = True
        eq.append(block(indeg[is_term], m))
        beq.append(np.ones(int(is_term.sum())))

        ub, bub = [], []
        for c in range(kk):
            cap = sp.hstack([-sp.identity(a, format="csr"), sp.csr_matrix((a, c * a)), sp.identity(a, format="csr"),
                             sp.csr_matrix((a, (kk - c - 1) * a))], format="csr")
            ub.append(block(cap, m))
            bub.append(np.zeros(a))
        steiner = ~is_term
        steiner[root] = False
        if steiner.any():
            ub.append(block(indeg[steiner], m))
            bub.append(np.ones(int(steiner.sum())))
            # an arc may leave a Steiner node only if some arc enters it
            out_rows = np.nonzero(steiner[tail])[0]
            if len(out_rows):
                r = np.arange(len(out_rows))
                leave = sp.csr_matrix((np.ones(len(out_rows)), (r, out_rows)), shape=(len(out_rows), a))
                enter = indeg[tail[out_rows]]
                ub.append(block((leave - enter).tocsr(), m))
                bub.append(np.zeros(len(out_rows)))
        a_eq = sp.vstack(eq, format="csr")
        b_eq = np.concatenate(beq)
        a_ub = sp.vstack(ub, format="csr") if ub else sp.csr_matrix((0, nvar))
        b_ub = np.concatenate(bub) if bub else np.zeros(0)
        cost = np.zeros(nvar)
        cost[:m] = [g.cost[k] for k in self.edges]
        col_hi = np.ones(nvar)
        col_hi[m + np.nonzero(head == root)[0]] = 0.0  # nothing flows back into the source

        inf = highspy.kHighsInf
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        h.addVars(nvar, np.zeros(nvar), col_hi)
        h.changeColsCost(nvar, np.arange(nvar, dtype=np.int32), cost)
        rows = sp.vstack([a_eq, a_ub], format="csr")
        row_lo = np.r_[b_eq, np.full(len(b_ub), -inf)]
        row_hi = np.r_[b_eq, b_ub]
        h.addRows(rows.shape[0], row_lo, row_hi, rows.nnz, rows.indptr[:-1].astype(np.int32),
                  rows.indices.astype(np.int32), rows.data)
        self.highs = h
        self._zcols = np.arange(m, dtype=np.int32)
        self.solves = 0

    def solve(self, lo, hi, deadline):
        """LP value, z vector and z reduced costs under z bounds ``[lo, hi]``.

        The HiGHS instance is kept between calls so each re-solve starts from
        the previous basis.
        """
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            raise _Timeout
        h = self.highs
        h.changeColsBounds(self.m, self._zcols, np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))
        h.setOptionValue("time_limit", h.getRunTime() + max(remaining, 1e-3))
        self.solves += 1
        h.run()
        status = h.getModelStatus()
        if status == highspy.HighsModelStatus.kOptimal:
            sol = h.getSolution()
            z = np.array(sol.col_value[:self.m])
            rc = np.array(sol.col_dual[:self.m])
            return float(h.getInfo().objective_function_value), z, rc
        if status in (highspy.HighsModelStatus.kInfeasible, highspy.HighsModelStatus.kUnboundedOrInfeasible):
            return None
        if status == highspy.HighsModelStatus.kTimeLimit:
            raise _Timeout
        raise SolverError(f"LP relaxation failed: {h.modelStatusToString(status)}")


class _Search:
    def __init__(self, g: IndexedGraph, lp: SteinerLP, deadline):
        self.g = g
        self.lp = lp
        self.deadline = deadline

    def cost(self, tree):
        return math.fsum(self.g.cost[k] for k in sorted(tree))

    def _round(self, zvec, hi):
        """Heuristic tree on the support of a fractional LP point."""
        g = self.g
        ok = [False] * g.m
        for p, k in enumerate(self.lp.edges):
            if zvec[p] > _INT_TOL and hi[p] > 0:
                ok[k] = True
        return steiner_heuristic(g, ok)

    def run(self, lo, hi, best_cost, best_tree, accept, first=False):
        """Depth-first branch-and-bound.

        ``accept(value)`` says whether a tree of that cost beats the current
        target; the search keeps only such trees. With ``first`` it stops at
        the first accepted tree, and only trees that honour the branching
        bounds count; otherwise any valid tree is a usable incumbent. Returns the best cost, the best tree and the
        smallest LP bound left open, which is None when the search finished.
        """
        stack = [(lo, hi, -math.inf)]
        current = math.inf  # bound of the node being processed when time runs out
        try:
            while stack:
                lo, hi, parent_val = stack.pop()
                if not accept(parent_val, best_cost):
                    continue
                current = parent_val
                r = self.lp.solve(lo, hi, self.deadline)
                if r is None:
                    continue
                val, zvec, _ = r
                if not accept(val - 1e-9 * max(1.0, abs(val)), best_cost):
                    continue
                frac = [(abs(zvec[p] - 0.5), p) for p in range(self.lp.m) if _INT_TOL < zvec[p] < 1 - _INT_TOL]
                if not frac:
                    tree = self.g.minimal_tree(self.lp.edges[p] for p in range(self.lp.m) if zvec[p] > 0.5)
                    if tree is not None and (not first or self._respects(tree, lo, hi)):
                        c = self.cost(tree)
                        if accept(c, best_cost):
                            best_cost, best_tree = c, tree
                            if first:
                                break
                    continue
                cand = self._round(zvec, hi)
                if cand is not None and (not first or self._respects(cand, lo, hi)):
                    c = self.cost(cand)
                    if accept(c, best_cost):
                        best_cost, best_tree = c, cand
                        if first:
                            break
                        if not accept(val - 1e-9 * max(1.0, abs(val)), best_cost):
                            continue
                _, p = min(frac)
                lo0, hi0 = lo.copy(), hi.copy()
                hi0[p] = 0.0
                lo1 = lo.copy()
                lo1[p] = 1.0
                stack.append((lo0, hi0, val))
                stack.append((lo1, hi.copy(), val))
        except _Timeout:
            return best_cost, best_tree, min([v for _, _, v in stack] + [current, best_cost])
        return best_cost, best_tree, None

    def _respects(self, tree, lo, hi):
        for p, k in enumerate(self.lp.edges):
            if lo[p] > 0.5 and k not in tree:
                return False
            if hi[p] < 0.5 and k in tree:
                return False
        return True


def solve_exact(problem: SynthesisProblem, timeout: float = DEFAULT_TIMEOUT_S) -> SynthesisSolution:
    """Minimum-cost source-connected radial feeder over the required nodes.

    On timeout the best tree found so far is returned with
    ``proven_optimal=False`` and the relative gap to the best open bound.
    """
    start = time.monotonic()
    deadline = start + timeout
    g = IndexedGraph(problem)
    if len(g.terminals) == 1:
        return build_solution(problem, [], proven_optimal=True, gap=0.0, solver="exact")
    incumbent = steiner_heuristic(g)
    if incumbent is None:
        raise SolverError("required nodes are not connected to the source in the candidate graph")
    active = _reduce(g)
    lp = SteinerLP(g, active)
    search = _Search(g, lp, deadline)
    tol = lambda c: 1e-9 * max(1.0, abs(c))  # noqa: E731

    def improves(value, target):
        return value < target - tol(target)

    lo = np.zeros(lp.m)
    hi = np.ones(lp.m)
    best_cost = search.cost(incumbent)
    best_cost, best_tree, open_bound = search.run(lo, hi, best_cost, incumbent, improves)
    stats = {"lp_solves": lp.solves, "tie_break_complete": False}
    if open_bound is not None:
        bound = max(open_bound, 0.0)  # edge costs are nonnegative
        gap = (best_cost - bound) / best_cost if best_cost > 0 else 0.0
        stats["lp_solves"] = lp.solves
        return build_solution(problem, best_tree, proven_optimal=False, gap=max(gap, 0.0), solver="exact",
                              stats=stats)

    best_tree, stats["tie_break_complete"] = _lexicographic(search, lp, best_cost, best_tree, tol)
    stats["lp_solves"] = lp.solves
    return build_solution(problem, best_tree, proven_optimal=True, gap=0.0, solver="exact", stats=stats)


def _lexicographic(search: _Search, lp: SteinerLP, opt, tree, tol):
    """Among trees of cost ``opt`` pick the smallest sorted edge-id list.

    Edges are decided in id order: an edge is fixed in if some optimal tree
    agrees with every earlier decision and contains it, otherwise fixed out.
    Returns (tree, completed).
    """
    lo = np.zeros(lp.m)
    hi = np.ones(lp.m)
    try:
        root = lp.solve(lo, hi, search.deadline)
    except _Timeout:
        return tree, False
    root_val, _, rc = root
    limit = opt + tol(opt)

    def within(value, target):
        return value <= limit

    for p, k in enumerate(lp.edges):
        if k in tree:
            lo[p] = 1.0
            continue
        if root_val + rc[p] > limit + tol(opt):
            hi[p] = 0.0
            continue
        trial = lo.copy()
        trial[p] = 1.0
        _, found, open_bound = search.run(trial, hi.copy(), limit, None, within, first=True)
        if open_bound is not None:
            return tree, False
        if found is not None:
            tree = found
            lo[p] = 1.0
        else:
            hi[p] = 0.0
    return tree, True
