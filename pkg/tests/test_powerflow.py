import json
import math
import random
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from feedforge.errors import ConfigError, ConvergenceError, NetworkValidationError
from feedforge.powerflow import (
    PowerFlowResult,
    check_radiality,
    max_branch_loading,
    max_voltage_deviation,
    result_from_dict,
    result_to_dict,
    run_power_flow,
    run_scenarios,
    validation_report,
)
from helpers import radial_network, random_radial, two_bus_closed_form, zbus_fixed_point


def result(v):
    return PowerFlowResult({f"b{i}": x for i, x in enumerate(v)}, {}, {}, 1, True, 0.0)


# -- run_power_flow ---------------------------------------------------------------

def test_zero_load_is_flat():
    net = radial_network([None, 0, 1, 1], [0j] + [0.01 + 0.02j] * 3, [0j] * 4)
    res = run_power_flow(net)
    assert res.iterations == 1 and res.converged
    assert set(res.v_pu.values()) == {1.0}
    assert max_voltage_deviation(res) == 0.0 and max_branch_loading(res, net) == 0.0


@pytest.mark.parametrize("slack", [1.0, 1.05])
def test_two_bus_closed_form(slack):
    z, s = 0.01 + 0.01j, 0.1 + 0j
    net = radial_network([None, 0], [0j, z], [0j, s], slack_v=slack)
    res = run_power_flow(net)
    assert res.v_pu["b0"] == slack
    assert abs(res.v_pu["b1"] - two_bus_closed_form(slack, z, s)) <= 1e-10


def test_three_bus_path_strictly_decreasing():
    parents, z, s = [None, 0, 1], [0j, 0.01 + 0.01j, 0.01 + 0.01j], [0j, 0.1 + 0.05j, 0.1 + 0.05j]
    res = run_power_flow(radial_network(parents, z, s))
    assert res.v_pu["b0"] > res.v_pu["b1"] > res.v_pu["b2"]
    oracle = zbus_fixed_point(parents, z, s)
    for i in range(3):
        assert abs(res.v_pu[f"b{i}"] - abs(oracle[i])) <= 1e-8


def test_slack_voltage_is_exact():
    rng = random.Random(2)
    net = radial_network(*random_radial(rng, 20), slack_v=1.03)
    assert run_power_flow(net).v_pu["b0"] == 1.03


def test_non_radial_rejected():
    net = radial_network([None, 0, 1], [0j, 0.01j, 0.01j], [0j, 0.1, 0.1])
    extra = replace(net.lines[0], id="Lx", from_bus="b0", to_bus="b2")
    loop = replace(net, lines=net.lines + (extra,))
    assert not check_radiality(loop)
    with pytest.raises(NetworkValidationError):
        run_power_flow(loop)


def test_disconnected_not_radial():
    net = radial_network([None, 0, None, 2], [0j, 0.01j, 0j, 0.01j], [0j] * 4)
    assert len(net.lines) == 2 and not check_radiality(net)


def test_tree_is_radial():
    assert check_radiality(radial_network([None, 0, 0, 1], [0j] + [0.01j] * 3, [0j] * 4))


def test_heavy_load_does_not_converge():
    net = radial_network([None, 0], [0j, 0.5 + 0.5j], [0j, 2.0 + 1j])
    res = run_power_flow(net, max_iter=50)
    assert not res.converged and res.iterations == 50
    with pytest.raises(ConvergenceError):
        max_voltage_deviation(res)
    scen = run_scenarios(net, {"sanity": 0.0, "stressed": 1.0})
    assert scen["sanity"][1].delta_v_max == 0.0 and scen["stressed"][1] is None


def test_bad_tolerance():
    with pytest.raises(ConfigError):
        run_power_flow(radial_network([None], [0j], [0j]), tol=0)


def test_mismatch_within_tolerance():
    rng = random.Random(8)
    res = run_power_flow(radial_network(*random_radial(rng, 30)))
    assert res.converged and res.max_mismatch <= res.tol


def test_deterministic():
    rng = random.Random(9)
    net = radial_network(*random_radial(rng, 40))
    a, b = run_power_flow(net), run_power_flow(net)
    assert a == b


# -- validation quantities --------------------------------------------------------

def test_max_deviation_picks_largest():
    assert max_voltage_deviation(result([1.0, 0.97, 1.02])) == pytest.approx(0.03, abs=1e-15)
    assert max_voltage_deviation(result([1.0, 1.0])) == 0.0


def test_branch_loading_ratio():
    # lossless line carrying exactly 0.2 MVA at the sending end
    net = radial_network([None, 0], [0j, 1e-12j], [0j, 0.2 + 0j], rating=0.4)
    res = run_power_flow(net)
    assert max_branch_loading(res, net) == pytest.approx(0.5, rel=1e-9)
    double = replace(net, lines=tuple(replace(ln, rating_mva=0.8) for ln in net.lines))
    assert max_branch_loading(res, double) == pytest.approx(0.25, rel=1e-9)


def test_zero_rating_rejected():
    net = radial_network([None, 0], [0j, 0.01j], [0j, 0.1], rating=0.0)
    with pytest.raises(NetworkValidationError):
        max_branch_loading(run_power_flow(net), net)


def test_report_fields():
    rng = random.Random(4)
    net = radial_network(*random_radial(rng, 10))
    rep = validation_report(run_power_flow(net), net, v_min=0.9)
    assert rep.radial and rep.delta_v_max >= 0 and rep.rho_max >= 0
    assert rep.v_bound_satisfied == (rep.v_min_observed >= 0.9)


def test_json_round_trip():
    rng = random.Random(6)
    net = radial_network(*random_radial(rng, 12))
    res = run_power_flow(net)
    rep = validation_report(res, net)
    doc = json.loads(json.dumps(result_to_dict(res, rep)))
    back, rep2 = result_from_dict(doc)
    assert back == res and rep2 == rep


# -- properties -------------------------------------------------------------------

seeds = st.integers(0, 10**9)


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(2, 50))
def test_matches_zbus_oracle(seed, n):
    rng = random.Random(seed)
    parents, z, s = random_radial(rng, n)
    res = run_power_flow(radial_network(parents, z, s))
    oracle = zbus_fixed_point(parents, z, s)
    for i in range(n):
        assert abs(res.v_pu[f"b{i}"] - abs(oracle[i])) <= 1e-8


@settings(max_examples=60, deadline=None)
@given(seeds, st.floats(0.001, 0.2), st.floats(0.0, 0.2), st.floats(1e-4, 0.05), st.floats(1e-4, 0.05),
       st.floats(0.95, 1.05))
def test_two_bus_oracle(seed, p, q, r, x, slack):
    z, s = complex(r, x), complex(p, q)
    net = radial_network([None, 0], [0j, z], [0j, s], slack_v=slack)
    exact = two_bus_closed_form(slack, z, s)
    tight = run_power_flow(net, tol=1e-10)
    assert abs(tight.v_pu["b1"] - exact) <= 1e-10
    # at the default tolerance the voltage error is about |z| times the final power mismatch
    res = run_power_flow(net)
    assert abs(res.v_pu["b1"] - exact) <= 2 * abs(z) * res.max_mismatch + 1e-15


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(2, 40))
def test_power_balance_and_monotone_paths(seed, n):
    rng = random.Random(seed)
    parents, z, s = random_radial(rng, n)
    net = radial_network(parents, z, s)
    res = run_power_flow(net)
    total = sum(s, 0j)
    assert abs(res.slack_s_mva - (total + res.losses_mva)) <= 10 * res.tol
    for i, p in enumerate(parents):
        if p is not None:
            assert res.v_pu[f"b{i}"] <= res.v_pu[f"b{p}"] + 10 * res.tol


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(2, 40), st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_monotone_in_load_scale(seed, n, a, b):
    a, b = sorted((a, b))
    rng = random.Random(seed)
    net = radial_network(*random_radial(rng, n))
    out = run_scenarios(net, {"lo": a, "hi": b})
    lo, hi = out["lo"][0], out["hi"][0]
    assert lo.converged and hi.converged
    for bus in lo.v_pu:
        assert lo.v_pu[bus] >= hi.v_pu[bus] - 10 * lo.tol


def test_losses_are_nonnegative():
    rng = random.Random(12)
    res = run_power_flow(radial_network(*random_radial(rng, 25)))
    assert res.losses_mva.real >= 0 and res.losses_mva.imag >= 0
    assert math.isfinite(abs(res.slack_s_mva))
