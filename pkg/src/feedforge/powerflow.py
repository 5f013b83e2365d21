"""Radial backward/forward-sweep power flow and the feeder validation checks."""

from __future__ import annotations

import cmath
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Mapping

from .electrify import ElectricalNetwork, scale_loads
from .errors import ConfigError, ConvergenceError, NetworkValidationError

DEFAULT_SCENARIOS = {"sanity": 0.25, "representative": 1.0, "stressed": 1.5}
DEFAULT_V_MIN = 0.95


@dataclass(frozen=True)
class PowerFlowResult:
    v_pu: Mapping[str, float]
    v_angle: Mapping[str, float]
    branch_s_mva: Mapping[str, float]  # line id -> |S| at the sending end
    iterations: int
    converged: bool
    max_mismatch: float
    tol: float = 1e-8
    depth: Mapping[str, int] = field(default_factory=dict)
    slack_s_mva: complex = 0j
    losses_mva: complex = 0j


@dataclass(frozen=True)
class ValidationReport:
    radial: bool
    delta_v_max: float
    rho_max: float
    v_min_bound: float
    v_bound_satisfied: bool
    v_min_observed: float


def check_radiality(net: ElectricalNetwork) -> bool:
    """True iff the line graph is connected and has exactly one line fewer than buses."""
    if len(net.lines) != len(net.buses) - 1 or not net.buses:
        return False
    ids = {b.id for b in net.buses}
    adj = defaultdict(list)
    for ln in net.lines:
        if ln.from_bus not in ids or ln.to_bus not in ids:
            return False
        adj[ln.from_bus].append(ln.to_bus)
        adj[ln.to_bus].append(ln.from_bus)
    start = net.buses[0].id
    seen = {start}
    stack = [start]
    while stack:
        for nb in adj[stack.pop()]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == len(ids)


def _tree(net: ElectricalNetwork):
    """BFS order from the slack plus, per bus, the (line index, parent) feeding it."""
    if not check_radiality(net):
        raise NetworkValidationError("power flow needs a radial network", ["line graph is not a spanning tree"])
    adj = defaultdict(list)
    for k, ln in enumerate(net.lines):
        adj[ln.from_bus].append((k, ln.to_bus))
        adj[ln.to_bus].append((k, ln.from_bus))
    up = {net.slack_bus: None}
    depth = {net.slack_bus: 0}
    order = [net.slack_bus]
    for b in order:
        for k, nb in adj[b]:
            if nb not in up:
                up[nb] = (k, b)
                depth[nb] = depth[b] + 1
                order.append(nb)
    return order, up, depth


def run_power_flow(net: ElectricalNetwork, tol: float = 1e-8, max_iter: int = 100) -> PowerFlowResult:
    """Backward/forward sweep on constant-power loads from a flat start.

    Each iteration computes load currents from the present voltages, sums
    them leaf-to-root into branch currents, then updates voltages
    root-to-leaf. The mismatch is the largest gap between the complex power
    each bus draws at the new voltage and its scheduled load, in per unit.
    """
    if not (tol > 0):
        raise ConfigError(f"tolerance must be > 0, got {tol}")
    if max_iter < 1:
        raise ConfigError(f"max_iter must be >= 1, got {max_iter}")
    order, up, depth = _tree(net)
    zb = net.z_base
    z = [complex(ln.r_ohm / zb, ln.x_ohm / zb) for ln in net.lines]
    s_load = {b: 0j for b in order}
    for ld in net.loads:
        s_load[ld.bus] += complex(ld.p_mw, ld.q_mvar) / net.base_mva
    vs = complex(net.slack_v_pu, 0.0)
    v = {b: vs for b in order}

    def sweep(volts):
        cur = {b: (s_load[b] / volts[b]).conjugate() for b in order}
        branch = {}
        acc = dict(cur)
        for b in reversed(order[1:]):
            k, p = up[b]
            branch[k] = acc[b]
            acc[p] += acc[b]
        return cur, branch

    converged = False
    mismatch = math.inf
    it = 0
    while it < max_iter:
        it += 1
        cur, branch = sweep(v)
        new = {order[0]: vs}
        for b in order[1:]:
            k, p = up[b]
            new[b] = new[p] - z[k] * branch[k]
        mismatch = max(abs(new[b] * cur[b].conjugate() - s_load[b]) for b in order)
        v = new
        if mismatch <= tol:
            converged = True
            break

    _, branch = sweep(v)
    s_branch = {}
    losses = []
    for b in order[1:]:
        k, p = up[b]
        s_branch[net.lines[k].id] = abs(v[p] * branch[k].conjugate()) * net.base_mva
        losses.append(z[k] * abs(branch[k]) ** 2)
    root_lines = sorted(up[b][0] for b in order[1:] if up[b][1] == order[0])
    slack_s = s_load[order[0]] + sum((vs * branch[k].conjugate() for k in root_lines), 0j)
    return PowerFlowResult(
        v_pu={b: abs(v[b]) for b in order},
        v_angle={b: cmath.phase(v[b]) for b in order},
        branch_s_mva=s_branch,
        iterations=it,
        converged=converged,
        max_mismatch=mismatch,
        tol=tol,
        depth=depth,
        slack_s_mva=slack_s * net.base_mva,
        losses_mva=sum(losses, 0j) * net.base_mva,
    )


def max_voltage_deviation(result: PowerFlowResult) -> float:
    if not result.converged:
        raise ConvergenceError("voltage deviation needs a converged power flow")
    return max(abs(v - 1.0) for v in result.v_pu.values())


def max_branch_loading(result: PowerFlowResult, net: ElectricalNetwork) -> float:
    if not result.converged:
        raise ConvergenceError("branch loading needs a converged power flow")
    worst = 0.0
    for ln in net.lines:
        if not (ln.rating_mva > 0):
            raise NetworkValidationError("branch loading needs positive ratings", [ln.id])
        if ln.id not in result.branch_s_mva:
            raise NetworkValidationError("power-flow result lacks a branch", [ln.id])
        worst = max(worst, result.branch_s_mva[ln.id] / ln.rating_mva)
    return worst


def validation_report(result: PowerFlowResult, net: ElectricalNetwork, v_min: float = DEFAULT_V_MIN) -> ValidationReport:
    lowest = min(result.v_pu.values())
    return ValidationReport(
        radial=check_radiality(net),
        delta_v_max=max_voltage_deviation(result),
        rho_max=max_branch_loading(result, net),
        v_min_bound=v_min,
        v_bound_satisfied=lowest >= v_min,
        v_min_observed=lowest,
    )


def run_scenarios(net: ElectricalNetwork, scales: Mapping[str, float] = DEFAULT_SCENARIOS,
                  v_min: float = DEFAULT_V_MIN, tol: float = 1e-8, max_iter: int = 100):
    """Scenario name -> (result, report). The report is None when the solve did not converge."""
    out = {}
    for name, factor in scales.items():
        if not (math.isfinite(factor) and factor >= 0):
            raise ConfigError(f"scenario {name!r}: scale factor must be >= 0, got {factor}")
        scaled = scale_loads(net, factor)
        res = run_power_flow(scaled, tol, max_iter)
        out[name] = (res, validation_report(res, scaled, v_min) if res.converged else None)
    return out


def result_to_dict(result: PowerFlowResult, report: ValidationReport | None = None) -> dict:
    doc = {
        "converged": result.converged,
        "iterations": result.iterations,
        "max_mismatch": result.max_mismatch,
        "tol": result.tol,
        "buses": [
            {"id": b, "v_pu": result.v_pu[b], "v_angle": result.v_angle[b], "depth": result.depth.get(b)}
            for b in result.v_pu
        ],
        "branches": [{"id": k, "s_mva": s} for k, s in result.branch_s_mva.items()],
        "slack_s_mva": [result.slack_s_mva.real, result.slack_s_mva.imag],
        "losses_mva": [result.losses_mva.real, result.losses_mva.imag],
    }
    if report is not None:
        doc["report"] = {
            "radial": report.radial,
            "delta_v_max": report.delta_v_max,
            "rho_max": report.rho_max,
            "v_min_bound": report.v_min_bound,
            "v_bound_satisfied": report.v_bound_satisfied,
            "v_min_observed": report.v_min_observed,
        }
    return doc


def result_from_dict(doc: Mapping) -> tuple[PowerFlowResult, ValidationReport | None]:
    res = PowerFlowResult(
        v_pu={b["id"]: b["v_pu"] for b in doc["buses"]},
        v_angle={b["id"]: b["v_angle"] for b in doc["buses"]},
        branch_s_mva={br["id"]: br["s_mva"] for br in doc["branches"]},
        iterations=doc["iterations"],
        converged=doc["converged"],
        max_mismatch=doc["max_mismatch"],
        tol=doc["tol"],
        depth={b["id"]: b["depth"] for b in doc["buses"]},
        slack_s_mva=complex(*doc["slack_s_mva"]),
        losses_mva=complex(*doc["losses_mva"]),
    )
    rep = doc.get("report")
    return res, None if rep is None else ValidationReport(**rep)
