"""MOVE-style flow model: routed trips, car-following, signalized intersections.

Vehicles advance on a fixed tick. Each one keeps a gap to whatever is ahead
in its lane (another vehicle, or the stop line of a red light) of at least
``gap_min + headway * speed`` and never crosses an intersection mid-tick,
so heading changes always fall on tick boundaries.
"""
from __future__ import annotations

import math
import random

from ..road_network import (GREEN, checkerboard_semaphores, quantize_pos, semaphore_state,
                            shortest_route)
from .base import MobilityConfig, TraceSet, Waypoint

CREEP_DISTANCE = 0.5  # below this free distance a vehicle closes the gap in one tick
MIN_MOVE = 1e-3  # per-tick moves shorter than this are dropped


class _Vehicle:
    __slots__ = ("id", "seg", "off", "route", "wps", "leg_disp", "px", "py")

    def __init__(self, vid, seg, off, route):
        self.id = vid
        self.seg = seg
        self.off = off
        self.route = list(route)
        self.wps = []
        self.leg_disp = None
        self.px = self.py = 0.0


class FlowSim:
    """Tick-driven car-following simulation over a road network.

    Use :func:`generate_flow` for the standard model; the class is exposed for
    hand-built scenarios (fixed routes, custom placements).
    """

    def __init__(self, net, duration, tick=0.5, gap_min=2.0, headway=1.5, rng=None,
                 redraw=True):
        self.net = net
        self.duration = duration
        self.tick = tick
        self.gap_min = gap_min
        self.headway = headway
        self.rng = rng or random.Random(0)
        self.redraw = redraw
        self.vehicles = []
        self.lane = {s.id: [] for s in net.segments}
        self.lights = net.intersection_lights
        self.history = None
        self._route_cache = {}

    def add_vehicle(self, seg_id, offset, route=()):
        seg = self.net.segments[seg_id]
        v = _Vehicle(len(self.vehicles), seg, quantize_pos(offset),
                     [self.net.segments[s] for s in route])
        v.px, v.py = self._xy(seg, v.off)
        v.wps.append(Waypoint(0.0, v.px, v.py, 0.0))
        self.vehicles.append(v)
        self.lane[seg.id].append(v)
        return v.id

    def _xy(self, seg, off):
        x, y = self.net.point_on(seg, off)
        return quantize_pos(x), quantize_pos(y)

    def _route(self, a, b):
        key = (a, b)
        r = self._route_cache.get(key)
        if r is None:
            r = self._route_cache[key] = [self.net.segments[s] for s in
                                          shortest_route(self.net, a, b, "travel_time").segments]
        return list(r)

    def new_destination(self, node):
        n = len(self.net.intersections)
        dest = self.rng.randrange(n - 1)
        if dest >= node:
            dest += 1
        return self._route(node, dest)

    def _follow_speed(self, free, dt):
        if free <= MIN_MOVE:
            return 0.0
        if free <= CREEP_DISTANCE:
            return free / dt
        return free / (dt + self.headway)

    def _leader_off(self, v, seg, above):
        best = None
        for o in self.lane[seg.id]:
            if o is not v and o.off > above and (best is None or o.off < best):
                best = o.off
        return best

    def _red(self, node, axis, t):
        sp = self.lights.get(node)
        return sp is not None and semaphore_state(sp, t, axis) != GREEN

    def _step_vehicle(self, v, t, dt):
        seg = v.seg
        L = seg.length
        if v.off >= L:
            if not v.route:
                if not self.redraw:
                    return
                v.route = self.new_destination(seg.to)
            if self._red(seg.to, seg.axis, t):
                return
            nxt = v.route[0]
            lead = self._leader_off(v, nxt, -1.0)
            if lead is not None:
                free = lead - self.gap_min
            elif self._red(nxt.to, nxt.axis, t):
                free = nxt.length
            else:
                free = math.inf
            speed = min(nxt.speed_limit, self._follow_speed(free, dt), nxt.length / dt)
            if speed * dt < MIN_MOVE:
                return
            self.lane[seg.id].remove(v)
            self.lane[nxt.id].append(v)
            v.route.pop(0)
            v.seg = nxt
            v.off = self._advance(0.0, speed * dt, nxt.length)
            return
        remaining = L - v.off
        lead = self._leader_off(v, seg, v.off)
        if lead is not None:
            free = lead - v.off - self.gap_min
        elif self._red(seg.to, seg.axis, t):
            free = remaining
        elif v.route:
            nl = self._leader_off(v, v.route[0], -1.0)
            free = math.inf if nl is None else remaining + nl - self.gap_min
        else:
            free = math.inf
        speed = min(seg.speed_limit, self._follow_speed(free, dt), remaining / dt)
        if speed * dt >= MIN_MOVE:
            v.off = self._advance(v.off, speed * dt, L)

    @staticmethod
    def _advance(off, dist, L):
        new = quantize_pos(off + dist)
        return L if new >= L - MIN_MOVE else new

    def _record(self, v, t_prev, dt):
        x, y = self._xy(v.seg, v.off)
        disp = (x - v.px, y - v.py)
        if v.leg_disp is None:
            v.leg_disp = disp
        elif disp != v.leg_disp:
            self._close_leg(v, t_prev)
            v.leg_disp = disp
        v.px, v.py = x, y

    def _close_leg(self, v, t_end):
        start = v.wps[-1]
        # position at t_end is the one recorded before this tick's move
        ex, ey = v.px, v.py
        d = math.hypot(ex - start.x, ey - start.y)
        span = t_end - start.t
        if span > 0:
            v.wps[-1] = start._replace(speed=d / span if d > 0 else 0.0)
            v.wps.append(Waypoint(t_end, ex, ey, 0.0))

    def run(self, record_history=False):
        if record_history:
            self.history = []
        nsteps = max(0, math.ceil(self.duration / self.tick - 1e-9))
        t = 0.0
        for step in range(nsteps):
            t = round(step * self.tick, 6)
            dt = min(self.tick, self.duration - t)
            if record_history:
                self.history.append((t, [(v.seg.id, v.off) for v in self.vehicles]))
            order = sorted(self.vehicles, key=lambda v: (-v.off, v.id))
            for v in order:
                self._step_vehicle(v, t, dt)
            for v in order:
                self._record(v, t, dt)
        if record_history:
            self.history.append((self.duration, [(v.seg.id, v.off) for v in self.vehicles]))
        out = []
        for v in self.vehicles:
            self._close_leg(v, self.duration)
            if v.wps[-1].t < self.duration:
                v.wps.append(Waypoint(self.duration, v.px, v.py, 0.0))
            out.append(v.wps)
        return out


def generate_flow(cfg: MobilityConfig) -> TraceSet:
    return run_flow(cfg)[0]


def run_flow(cfg: MobilityConfig, record_history=False):
    """Generate a FLOW trace; also returns the :class:`FlowSim` (with per-tick
    lane history when ``record_history`` is set)."""
    cfg.validate("FLOW")
    net = cfg.net
    if cfg.flow_signals:
        net = checkerboard_semaphores(net, cfg.signal_period, cfg.green_fraction)
    rng = random.Random(cfg.seed)
    sim = FlowSim(net, cfg.duration, cfg.tick, cfg.gap_min, cfg.headway, rng)
    spacing = 2.0 * cfg.gap_min
    for _ in range(cfg.n_vehicles):
        for _attempt in range(10000):
            seg = rng.choice(net.segments)
            off = quantize_pos(rng.uniform(0.0, seg.length))
            if off < seg.length and all(abs(o.off - off) >= spacing for o in sim.lane[seg.id]):
                break
        else:
            raise ValueError("road network too small to place all vehicles")
        sim.add_vehicle(seg.id, off)
    for v in sim.vehicles:
        v.route = sim.new_destination(v.seg.to)
    wps = sim.run(record_history)
    return TraceSet(net.area_width, net.area_height, cfg.duration, wps, []), sim
