import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neuralmip.bnb import BnbConfig, solve_bnb
from neuralmip.milp import brute_force_milp
from neuralmip.power import (
    DecodeError, GeneratorParams, Line, LoadScenario, SystemSpec, TopologyError, UcSchedule,
    build_uc_milp, compute_ptdf, dc_flows, decode_solution, desk_system, encode_schedule,
    generate_load_scenarios, make_instance, segment_slopes, validate_schedule)
from neuralmip.power.scenarios import base_shape
from neuralmip.power.ucmodel import binary_count, slopes_from_breakpoints


def _line(k, f, t, x=0.1, cap=100.0):
    return Line(k, f, t, x, 1.0 / x, cap, -cap)


def _gen(id=0, bus=1, **kw):
    base = dict(p_min=10.0, p_max=50.0, su=30.0, sd=30.0, ut=1, dt=1, ru=50.0, rd=50.0,
                cu=(10.0,), nd=(1,), pb=(10.0, 50.0), cb=(100.0, 300.0), nl=1, v0=0, p0=0.0,
                init_state_periods=1)
    base.update(kw)
    return GeneratorParams(id=id, bus=bus, **base)


# -- PTDF ----------------------------------------------------------------------------------

def test_ptdf_two_bus():
    system = SystemSpec((1, 2), (_line(0, 1, 2),), (_gen(),), slack_bus=2)
    gen, bus = compute_ptdf(system)
    assert bus[0, 0] == pytest.approx(1.0)
    assert bus[1, 0] == 0.0
    assert gen[0, 0] == pytest.approx(1.0)


def test_ptdf_triangle_matches_reduced_solve():
    lines = (_line(0, 1, 2), _line(1, 2, 3), _line(2, 1, 3))
    system = SystemSpec((1, 2, 3), lines, (_gen(),), slack_bus=3)
    _, bus = compute_ptdf(system)
    # reduced DC system on buses 1, 2 (slack 3 removed), b = 1/x = 10 per line
    B = np.array([[20.0, -10.0], [-10.0, 20.0]])
    theta = np.linalg.solve(B, np.array([1.0, 0.0]))
    flow_13 = 10.0 * theta[0]
    flow_12 = 10.0 * (theta[0] - theta[1])
    assert flow_13 == pytest.approx(2 / 3)
    assert bus[0, 2] == pytest.approx(flow_13, abs=1e-12)
    assert bus[0, 0] == pytest.approx(flow_12, abs=1e-12)
    assert bus[0, 1] == pytest.approx(1 / 3, abs=1e-12)


def test_ptdf_slack_row_zero_and_generator_rows():
    system = desk_system(0)
    gen, bus = compute_ptdf(system)
    assert np.all(bus[system.bus_index(system.slack_bus)] == 0.0)
    for g, unit in enumerate(system.generators):
        assert np.array_equal(gen[g], bus[system.bus_index(unit.bus)])


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=8, max_size=8))
def test_ptdf_reproduces_dc_flows(inj):
    system = desk_system(0)
    _, bus = compute_ptdf(system)
    p = np.append(inj, -sum(inj))
    assert np.allclose(bus.T @ p, dc_flows(system, p), atol=1e-8)


def test_disconnected_system_rejected():
    with pytest.raises(TopologyError):
        SystemSpec((1, 2, 3), (_line(0, 1, 2),), (_gen(),), slack_bus=1)


# -- slopes and scenarios ---------------------------------------------------------------------

def test_segment_slopes_examples():
    assert np.allclose(slopes_from_breakpoints([10, 20, 30], [100, 150, 220]), [5.0, 7.0])
    assert np.allclose(slopes_from_breakpoints([0, 100], [0, 500]), [5.0])
    gen = _gen(pb=(10.0, 20.0, 50.0), cb=(100.0, 150.0, 400.0), nl=2)
    assert np.allclose(segment_slopes(gen), [5.0, 250.0 / 30.0])
    with pytest.raises(ZeroDivisionError):
        slopes_from_breakpoints([10, 10], [1, 2])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.5, 10), min_size=1, max_size=6),
       st.lists(st.floats(0.1, 5), min_size=1, max_size=6))
def test_convex_costs_give_nondecreasing_slopes(widths, raw):
    k = min(len(widths), len(raw))
    slopes = np.cumsum(raw[:k])                       # increasing marginal costs
    pb = np.concatenate([[0.0], np.cumsum(widths[:k])])
    cb = np.concatenate([[0.0], np.cumsum(slopes * np.asarray(widths[:k]))])
    vc = slopes_from_breakpoints(pb, cb)
    assert np.all(np.diff(vc) >= -1e-9)


def test_scenarios_without_noise_follow_shape():
    shape = base_shape(12)
    w = np.array([0.2, 0.3, 0.5])
    scs = generate_load_scenarios(shape, 3, 300.0, 0.0, 0.0, 7, w)
    expected = 300.0 * np.outer(w, shape / shape.max())
    for sc in scs:
        assert np.array_equal(sc.d, expected)
        assert np.all(sc.r == 0.0)


def test_scenarios_deterministic():
    shape = base_shape(12)
    w = np.full(4, 0.25)
    a = generate_load_scenarios(shape, 4, 250.0, 0.03, 0.1, 11, w)
    b = generate_load_scenarios(shape, 4, 250.0, 0.03, 0.1, 11, w)
    for x, y in zip(a, b):
        assert x.d.tobytes() == y.d.tobytes() and x.r.tobytes() == y.r.tobytes()
        assert np.allclose(x.r, 0.03 * x.d.sum(axis=0))


# -- UC model -------------------------------------------------------------------------------

def test_binary_count(tiny):
    problem, vmap = build_uc_milp(tiny)
    G, T = len(tiny.generators), tiny.horizon
    assert problem.binary_columns.size == 3 * G * T == binary_count(tiny) == 24
    assert len(vmap) == problem.n


def test_single_period_lp_equals_cost_epigraph():
    # one unit, initially on, one period, load within [p_min, p_max]
    gen = _gen(pb=(10.0, 30.0, 50.0), cb=(100.0, 200.0, 400.0), nl=2, v0=1, p0=20.0,
               init_state_periods=1, ru=100.0, rd=100.0)
    system = SystemSpec((1, 2), (_line(0, 1, 2),), (gen,), slack_bus=1)
    load = 40.0
    inst = make_instance(system, LoadScenario(np.array([[0.0], [load]]), np.zeros(1)))
    problem, vmap = build_uc_milp(inst)
    oracle = brute_force_milp(problem)
    sched = decode_solution(oracle.x, vmap)
    # staying on: x = 1, no start-up; production cost is the piecewise curve at 40 MW
    assert sched.x[0, 0] == 1 and sched.s[0, 0] == 0
    expected_v = 200.0 + (load - 30.0) * 10.0 - 100.0
    assert sched.v_cost[0, 0] == pytest.approx(expected_v)
    cb1 = vmap.cb1[0]
    assert oracle.objective == pytest.approx(expected_v + cb1)


def test_decode_zero_vector(tiny):
    problem, vmap = build_uc_milp(tiny)
    sched = decode_solution(np.zeros(problem.n), vmap)
    assert sched.total_cost == 0.0
    assert not sched.x.any() and not sched.s.any() and not sched.z.any()


def test_decode_rejects_fractional(tiny):
    problem, vmap = build_uc_milp(tiny)
    x = np.zeros(problem.n)
    x[vmap.col("x", 0, 0)] = 0.5
    with pytest.raises(DecodeError):
        decode_solution(x, vmap)


def test_round_trip_and_validation(tiny):
    problem, vmap = build_uc_milp(tiny)
    result = solve_bnb(problem, BnbConfig())
    sched = decode_solution(result.incumbent, vmap)
    assert sched.total_cost == pytest.approx(result.upper_bound, rel=1e-6)
    assert validate_schedule(tiny, sched).ok
    assert np.allclose(encode_schedule(sched, vmap), result.incumbent, atol=1e-9)
    # s + x <= 1 everywhere, per the state-transition semantics
    assert np.all(sched.s + sched.x <= 1)


def test_permuted_map_decodes_identically(tiny):
    problem, vmap = build_uc_milp(tiny)
    x = solve_bnb(problem, BnbConfig()).incumbent
    perm = np.random.default_rng(3).permutation(problem.n)
    a = decode_solution(x, vmap)
    b = decode_solution(x[perm], vmap.permuted(perm))
    for k in ("x", "s", "z", "p_above", "p_bar", "f_cost", "v_cost"):
        assert np.array_equal(getattr(a, k), getattr(b, k))
    assert a.total_cost == b.total_cost


def test_all_off_violates_load_balance(tiny):
    problem, vmap = build_uc_milp(tiny)
    sched = decode_solution(np.zeros(problem.n), vmap)
    rep = validate_schedule(tiny, sched)
    assert {v.t for v in rep.by_family("load_balance")} == set(range(tiny.horizon))


def test_broken_transition_flagged(tiny):
    problem, vmap = build_uc_milp(tiny)
    sched = decode_solution(solve_bnb(problem, BnbConfig()).incumbent, vmap)
    x = sched.x.copy()
    z = sched.z.copy()
    # unit 0 stays on throughout; drop it at t=2 without recording a shutdown
    assert x[0, 1] == 1 and x[0, 2] == 1 and z[0, 2] == 0
    x[0, 2] = 0
    bad = UcSchedule(x, sched.s, z, sched.p_above, sched.p_bar, sched.f_cost, sched.v_cost,
                     sched.total_cost)
    assert "state_transition" in validate_schedule(tiny, bad).families()


def test_system_json_round_trip(tmp_path):
    system = desk_system(0)
    path = tmp_path / "system.json"
    system.save(path)
    assert SystemSpec.load(path) == system
    assert set(json.loads(path.read_text())) >= {"buses", "lines", "generators", "slack_bus"}
