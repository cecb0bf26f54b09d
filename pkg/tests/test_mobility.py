import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from vanetlab.errors import InvalidConfigError, OutOfRangeError
from vanetlab.mobility import (Damage, Downtown, FlowSim, MobilityConfig, Waypoint, generate,
                               generate_downtown, generate_manhattan, position_at, run_flow,
                               simple_track)
from vanetlab.mobility.manhattan import _Driver, in_rect
from vanetlab.road_network import (AXIS_Y, SemaphoreSpec, build_grid, place_semaphores,
                                   shortest_route)
from vanetlab.trace_io import write_trace

GRID = build_grid(5, 5, 500, 500, 40)


def cfg_for(model, n=10, duration=120.0, seed=1, **kw):
    net = GRID
    if model in ("MM", "DM"):
        net = place_semaphores(GRID, 0.5, 0.1, 60, seed)
    if model == "DM":
        kw.setdefault("downtown", Downtown())
    return MobilityConfig(model, n, duration, net, seed=seed, **kw)


def legs(wps):
    for a, b in zip(wps, wps[1:]):
        if b.t > a.t and a.speed > 0:
            yield a, b


# -- position_at ----------------------------------------------------------

def test_position_midpoint():
    wps = [Waypoint(0, 0, 0, 10), Waypoint(10, 100, 0, 0)]
    assert position_at(wps, 5) == (50, 0, 10)


def test_position_at_waypoint_exact():
    wps = [Waypoint(0, 1.5, 2.5, 3), Waypoint(2, 7.5, 2.5, 0), Waypoint(9, 7.5, 2.5, 0)]
    assert position_at(wps, 2)[:2] == (7.5, 2.5)
    assert position_at(wps, 9) == (7.5, 2.5, 0.0)


def test_position_out_of_range():
    wps = [Waypoint(0, 0, 0, 10), Waypoint(10, 100, 0, 0)]
    with pytest.raises(OutOfRangeError):
        position_at(wps, 11)
    with pytest.raises(OutOfRangeError):
        position_at(wps, -1)


def test_dwell_speed_zero():
    wps = [Waypoint(0, 0, 0, 0), Waypoint(5, 0, 0, 2), Waypoint(10, 10, 0, 0)]
    assert position_at(wps, 3) == (0, 0, 0.0)


# -- Simple model -----------------------------------------------------------

def test_simple_wrap_at_one_second():
    wps = simple_track(490.0, 100.0, (1, 0), 10.0, 500.0, 500.0, 5.0)
    x, y, _ = position_at(wps, 1.0)
    assert (x, y) == (0.0, 100.0)
    x, y, s = position_at(wps, 1.5)
    assert (x, y, s) == pytest.approx((5.0, 100.0, 10.0))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_simple_heading_constant(seed):
    ts = generate(cfg_for("SM", n=6, duration=60, seed=seed))
    for wps in ts.vehicles:
        heads = set()
        for a, b in legs(wps):
            d = math.hypot(b.x - a.x, b.y - a.y)
            heads.add((round((b.x - a.x) / d, 9), round((b.y - a.y) / d, 9)))
        assert len(heads) <= 1


def test_simple_no_dwell():
    ts = generate(cfg_for("SM", n=5, duration=60, seed=3))
    for wps in ts.vehicles:
        for a, b in zip(wps, wps[1:]):
            if b.t > a.t:
                assert a.speed > 0


# -- determinism and kinematics (all models) --------------------------------

@pytest.mark.parametrize("model", ["SM", "MM", "DM", "FLOW"])
def test_deterministic(model):
    a = generate(cfg_for(model, seed=11))
    b = generate(cfg_for(model, seed=11))
    assert a == b
    assert write_trace(a) == write_trace(b)
    c = generate(cfg_for(model, seed=12))
    assert write_trace(a) != write_trace(c)


@pytest.mark.parametrize("model", ["SM", "MM", "DM", "FLOW"])
def test_kinematic_consistency(model):
    ts = generate(cfg_for(model, n=12, duration=150, seed=4))
    for wps in ts.vehicles:
        assert wps[0].t == 0.0
        assert wps[-1].t <= ts.duration
        for a, b in zip(wps, wps[1:]):
            assert b.t >= a.t
            if b.t > a.t and a.speed > 0:
                dt = b.t - a.t
                assert abs(math.hypot(b.x - a.x, b.y - a.y) / a.speed - dt) <= 1e-6 * dt


@pytest.mark.parametrize("model", ["SM", "MM", "DM", "FLOW"])
def test_bounds_and_speed(model):
    ts = generate(cfg_for(model, n=10, duration=100, seed=8))
    rng = random.Random(0)
    for v in range(ts.n_vehicles):
        for _ in range(300):
            x, y, s = ts.position_at(v, rng.uniform(0, ts.duration))
            assert -1e-9 <= x <= 500 + 1e-9 and -1e-9 <= y <= 500 + 1e-9
            assert 0 <= s <= 40 + 1e-9


def test_config_validation():
    with pytest.raises(InvalidConfigError):
        generate(MobilityConfig("XX", 1, 10, GRID))
    with pytest.raises(InvalidConfigError):
        generate(MobilityConfig("SM", 0, 10, GRID))
    with pytest.raises(InvalidConfigError):
        generate(MobilityConfig("SM", 1, 10, GRID, min_speed=50))
    with pytest.raises(InvalidConfigError):
        generate(MobilityConfig("SM", 1, 0, GRID))
    with pytest.raises(InvalidConfigError):
        generate_manhattan(MobilityConfig("SM", 1, 10, GRID))


# -- Manhattan --------------------------------------------------------------

def test_red_light_dwell_is_remaining_red():
    # vehicle drives 100 m at exactly 10 m/s and reaches a light that has 12 s of red left
    net = build_grid(5, 5, 500, 500, 40)
    seg = net.segments[0]  # (0,0) -> (100,0), horizontal
    light = SemaphoreSpec(60.0, 0.5, 22.0, "x", intersection=seg.to)
    net = net.__class__(**{**net.__dict__, "semaphores": (light,)})
    cfg = MobilityConfig("MM", 1, 40.0, net, max_speed=10.0, min_speed=10.0)
    wps = _Driver(net, cfg, random.Random(0), None, False, None, ()).run(seg, 0.0)
    assert wps[1] == Waypoint(10.0, 100.0, 0.0, 0.0)
    assert wps[2].t == 22.0 and (wps[2].x, wps[2].y) == (100.0, 0.0)


def test_red_dwells_match_signals():
    net = place_semaphores(GRID, 1.0, 0.0, 60, 5)
    ts = generate(MobilityConfig("MM", 15, 200, net, seed=5))
    lights = net.intersection_lights
    coords = {(n.x, n.y): n.id for n in net.intersections}
    found = 0
    for wps in ts.vehicles:
        for prev, a, b in zip(wps, wps[1:], wps[2:]):
            if a.speed == 0 and b.t > a.t and b.t < ts.duration and (a.x, a.y) in coords:
                axis = "x" if prev.y == a.y else "y"
                from vanetlab.road_network import red_remaining
                wait = red_remaining(lights[coords[(a.x, a.y)]], a.t, axis)
                assert b.t - a.t == pytest.approx(wait, abs=1.5e-3)
                found += 1
    assert found > 0


def test_no_damage_events_without_damage():
    assert generate(cfg_for("MM", damage=Damage(0.0, 30))).damage_events == []


def test_damaged_vehicle_dwells():
    ts = generate(cfg_for("MM", n=20, duration=200, seed=2, damage=Damage(0.3, 30)))
    assert ts.damage_events
    for ev in ts.damage_events:
        assert ev.start + ev.duration <= ts.duration
        for k in range(11):
            t = ev.start + ev.duration * k / 10
            x, y, s = ts.position_at(ev.vehicle, t)
            assert (x, y) == pytest.approx((ev.x, ev.y), abs=1e-6)
    assert len({ev.vehicle for ev in ts.damage_events}) == len(ts.damage_events)


@pytest.mark.parametrize("model", ["MM", "DM"])
def test_lattice_adherence(model):
    ts = generate(cfg_for(model, n=15, duration=150, seed=6))
    lat = [i * 100.0 for i in range(6)]
    for wps in ts.vehicles:
        for w in wps:
            assert (min(abs(w.x - c) for c in lat) <= 1e-6
                    or min(abs(w.y - c) for c in lat) <= 1e-6)


# -- Downtown ---------------------------------------------------------------

def test_downtown_full_density():
    ts = generate(cfg_for("DM", n=20, downtown=Downtown(density_fraction=1.0)))
    rect = Downtown().resolve(500, 500)
    assert all(in_rect(rect, w[0].x, w[0].y) for w in ts.vehicles)


def test_downtown_quota_exact():
    ts = generate(cfg_for("DM", n=100, duration=30, seed=9))
    rect = Downtown().resolve(500, 500)
    assert sum(in_rect(rect, w[0].x, w[0].y) for w in ts.vehicles) == 70


def test_downtown_speed_cap():
    ts = generate(cfg_for("DM", n=40, duration=150, seed=10))
    rect = Downtown().resolve(500, 500)
    for wps in ts.vehicles:
        for a, b in legs(wps):
            if in_rect(rect, a.x, a.y) and in_rect(rect, b.x, b.y):
                assert a.speed <= 20 + 1e-9


def test_downtown_requires_config():
    net = place_semaphores(GRID, 0.5, 0.1, 60, 1)
    with pytest.raises(InvalidConfigError):
        generate_downtown(MobilityConfig("DM", 5, 10, net))


# -- Flow -------------------------------------------------------------------

def test_flow_green_wave_trip_time():
    net = build_grid(5, 5, 500, 500, 40)
    route = shortest_route(net, 0, net.intersection_id(3, 2), "travel_time")
    first, rest = route.segments[0], route.segments[1:]
    sim = FlowSim(net, 60.0, redraw=False)
    sim.add_vehicle(first, 0.0, rest)
    wps = sim.run()[0]
    end = net.intersections[net.intersection_id(3, 2)]
    arrival = next(w.t for w in wps if (w.x, w.y) == (end.x, end.y))
    expected = sum(net.segments[s].length / net.segments[s].speed_limit
                   for s in route.segments)
    assert abs(arrival - expected) <= sim.tick


def test_flow_follower_stops_gap_min_behind():
    net = build_grid(5, 5, 500, 500, 40)
    seg = net.segments[0]
    # the x approach stays red for the whole run
    light = SemaphoreSpec(1000.0, 0.5, 0.0, AXIS_Y, intersection=seg.to)
    net = net.__class__(**{**net.__dict__, "semaphores": (light,)})
    sim = FlowSim(net, 60.0, redraw=False)
    lead = sim.add_vehicle(seg.id, 90.0)
    follow = sim.add_vehicle(seg.id, 80.0)
    sim.run()
    gap = sim.vehicles[lead].off - sim.vehicles[follow].off
    assert sim.vehicles[lead].off == seg.length
    assert gap == pytest.approx(2.0, abs=1e-3)


def test_flow_gaps_every_tick():
    ts, sim = run_flow(cfg_for("FLOW", n=60, duration=120, seed=3), record_history=True)
    for _t, state in sim.history:
        lanes = {}
        for seg, off in state:
            lanes.setdefault(seg, []).append(off)
        for offs in lanes.values():
            offs.sort()
            for a, b in zip(offs, offs[1:]):
                assert b - a >= 2.0 - 1e-6
