"""CityMob Manhattan and Downtown models.

Vehicles drive lane by lane over the grid, pick a turn at every
intersection, stop at red semaphores, and (optionally) break down. Healthy
vehicles avoid lanes blocked by a broken-down car by choosing another turn
at the intersection before the blocked lane.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from ..errors import InvalidConfigError
from ..road_network import RoadNetwork, Segment, quantize_pos, quantize_time, red_remaining
from .base import DamageEvent, MobilityConfig, Track, TraceSet

LEFT, RIGHT, STRAIGHT, UTURN = "left", "right", "straight", "uturn"


@dataclass(frozen=True)
class Blockage:
    segment: int
    start: float
    end: float


def generate_manhattan(cfg: MobilityConfig) -> TraceSet:
    cfg.validate("MM")
    return _generate(cfg, None)


def generate_downtown(cfg: MobilityConfig) -> TraceSet:
    cfg.validate("DM")
    if cfg.downtown is None:
        raise InvalidConfigError("Downtown model needs a downtown configuration")
    rect = cfg.downtown.resolve(cfg.net.area_width, cfg.net.area_height)
    return _generate(cfg, rect)


def _generate(cfg, rect):
    net = cfg.net
    n = cfg.n_vehicles
    rng = random.Random(cfg.seed)

    inside = set()
    if rect is not None:
        quota = round(cfg.downtown.density_fraction * n)
        inside = set(rng.sample(range(n), quota))
        pieces_in = _lane_pieces(net, rect, True)
        pieces_out = _lane_pieces(net, rect, False)
        if quota and not pieces_in:
            raise InvalidConfigError("downtown rectangle contains no street")
        if quota < n and not pieces_out:
            raise InvalidConfigError("no street lies outside the downtown rectangle")

    starts = []
    for v in range(n):
        if rect is None:
            seg = rng.choice(net.segments)
            starts.append((seg, quantize_pos(rng.uniform(0.0, seg.length))))
        else:
            starts.append(_draw_piece(net, rng, pieces_in if v in inside else pieces_out,
                                      rect, v in inside))

    damage_at = {}
    if cfg.damage is not None and cfg.damage.p_damage > 0:
        latest = cfg.duration - cfg.damage.repair_time - 0.01
        for v in range(n):
            if rng.random() < cfg.damage.p_damage and latest > 0:
                damage_at[v] = quantize_time(rng.uniform(0.0, latest))

    vehicles = [None] * n
    events = []
    blockages = []
    # Broken-down vehicles first so the rest can steer around them.
    order = sorted(damage_at) + [v for v in range(n) if v not in damage_at]
    for v in order:
        drv = _Driver(net, cfg, random.Random(f"{cfg.seed}:{v}"), rect, v in inside,
                      damage_at.get(v), blockages if v not in damage_at else ())
        vehicles[v] = drv.run(*starts[v])
        if drv.damage is not None:
            seg_id, t0, x, y = drv.damage
            events.append(DamageEvent(v, t0, cfg.damage.repair_time, x, y))
            blockages.append(Blockage(seg_id, t0, t0 + cfg.damage.repair_time))
    events.sort()
    return TraceSet(net.area_width, net.area_height, cfg.duration, vehicles, events)


def _clip(a, b, lo, hi):
    """Overlap of [min(a,b), max(a,b)] with [lo, hi] as an interval, or None."""
    s, e = max(min(a, b), lo), min(max(a, b), hi)
    return (s, e) if s <= e else None


def segment_touches(net: RoadNetwork, seg: Segment, rect) -> bool:
    x0, y0, x1, y1 = rect
    a, b = net.intersections[seg.from_], net.intersections[seg.to]
    if seg.axis == "x":
        return y0 <= a.y <= y1 and _clip(a.x, b.x, x0, x1) is not None
    return x0 <= a.x <= x1 and _clip(a.y, b.y, y0, y1) is not None


def in_rect(rect, x, y):
    return rect[0] <= x <= rect[2] and rect[1] <= y <= rect[3]


def _lane_pieces(net, rect, inside):
    """(segment, lo, hi) offset intervals of each lane lying inside/outside ``rect``."""
    x0, y0, x1, y1 = rect
    out = []
    for seg in net.segments:
        a, b = net.intersections[seg.from_], net.intersections[seg.to]
        if seg.axis == "x":
            on_line = y0 <= a.y <= y1
            ov = _clip(a.x, b.x, x0, x1) if on_line else None
            start, sign = a.x, (1 if b.x > a.x else -1)
        else:
            on_line = x0 <= a.x <= x1
            ov = _clip(a.y, b.y, y0, y1) if on_line else None
            start, sign = a.y, (1 if b.y > a.y else -1)
        if ov is not None:
            lo, hi = sorted(((ov[0] - start) * sign, (ov[1] - start) * sign))
        if inside:
            if ov is not None and hi > lo:
                out.append((seg, lo, hi))
        else:
            if ov is None:
                out.append((seg, 0.0, seg.length))
            else:
                if lo > 0:
                    out.append((seg, 0.0, lo))
                if hi < seg.length:
                    out.append((seg, hi, seg.length))
    return out


def _draw_piece(net, rng, pieces, rect, want_inside):
    total = sum(hi - lo for _, lo, hi in pieces)
    for _ in range(1000):
        u = rng.uniform(0.0, total)
        for seg, lo, hi in pieces:
            if u <= hi - lo:
                break
            u -= hi - lo
        off = quantize_pos(lo + u)
        off = min(max(off, 0.0), seg.length)
        if off >= seg.length:
            continue
        x, y = net.point_on(seg, off)
        if in_rect(rect, x, y) == want_inside:
            return seg, off
    raise InvalidConfigError("could not place a vehicle in the requested zone")


def turn_kind(net, seg_in, seg_out):
    a, b = net.intersections[seg_in.from_], net.intersections[seg_in.to]
    c = net.intersections[seg_out.to]
    hx, hy = _sign(b.x - a.x), _sign(b.y - a.y)
    nx, ny = _sign(c.x - b.x), _sign(c.y - b.y)
    if (nx, ny) == (hx, hy):
        return STRAIGHT
    if (nx, ny) == (-hx, -hy):
        return UTURN
    return LEFT if hx * ny - hy * nx > 0 else RIGHT


def _sign(v):
    return (v > 0) - (v < 0)


class _Driver:
    def __init__(self, net, cfg, rng, rect, downtown_vehicle, damage_start, blockages):
        self.net = net
        self.cfg = cfg
        self.rng = rng
        self.rect = rect
        self.downtown_vehicle = downtown_vehicle and rect is not None
        self.damage_start = damage_start
        self.blockages = blockages
        self.damage = None  # (segment id, start, x, y) once it happens
        left, right, straight = cfg.turn_probs
        self.turn_w = {LEFT: left, RIGHT: right, STRAIGHT: straight, UTURN: 1.0}

    def leg_speed(self, seg):
        hi = self.cfg.max_speed
        if self.rect is not None and segment_touches(self.net, seg, self.rect):
            hi *= self.cfg.downtown.speed_factor
        lo = min(self.cfg.min_speed, hi)
        return self.rng.uniform(lo, hi)

    def run(self, seg, offset):
        net = self.net
        x, y = net.point_on(seg, offset)
        self.tr = tr = Track(x, y, self.cfg.duration)
        while not tr.done:
            speed = self.leg_speed(seg)
            for stop_off, light in self._stops(seg, offset):
                self._drive(seg, stop_off, speed)
                if tr.done:
                    break
                if light is not None:
                    wait = red_remaining(light, tr.t, seg.axis)
                    if wait > 0:
                        tr.dwell_until(tr.t + wait)
                offset = stop_off
            if tr.done:
                break
            seg = self._choose_next(seg, tr.t)
            offset = 0.0
        return tr.finish()

    def _stops(self, seg, offset):
        stops = []
        mid = self.net.street_lights.get(seg.street)
        if mid is not None:
            pos = mid.offset if seg.id % 2 == 0 else seg.length - mid.offset
            if pos > offset:
                stops.append((quantize_pos(pos), mid))
        stops.append((seg.length, self.net.intersection_lights.get(seg.to)))
        return stops

    def _drive(self, seg, target_off, speed):
        tr = self.tr
        x, y = self.net.point_on(seg, target_off)
        t0 = tr.t
        if self.damage_start is not None and self.damage is None:
            d = abs(x - tr.x) + abs(y - tr.y)
            t_arrive = t0 + d / speed
            if t0 <= self.damage_start < t_arrive:
                f = (self.damage_start - t0) / (t_arrive - t0)
                bx, by = tr.x + (x - tr.x) * f, tr.y + (y - tr.y) * f
                tr.move_to(bx, by, speed)
                if tr.done:
                    return
                self._break_down(seg)
            elif self.damage_start < t0:
                self._break_down(seg)
        tr.move_to(x, y, speed)

    def _break_down(self, seg):
        tr = self.tr
        self.damage = (seg.id, tr.t, tr.x, tr.y)
        tr.dwell_until(tr.t + self.cfg.damage.repair_time)

    def _blocked(self, seg, t):
        horizon = t + seg.length / self.cfg.min_speed
        return any(b.segment == seg.id and b.start < horizon and b.end > t
                   for b in self.blockages)

    def _choose_next(self, seg_in, t):
        net = self.net
        options = [(turn_kind(net, seg_in, s), s) for s in net.out_segments[seg_in.to]
                   if s.to != seg_in.from_]
        if not options:
            options = [(UTURN, net.segment_between[(seg_in.to, seg_in.from_)])]
        if self.blockages:
            clear = [o for o in options if not self._blocked(o[1], t)]
            if clear:
                options = clear
        if self.downtown_vehicle:
            toward = [o for o in options
                      if in_rect(self.rect, net.intersections[o[1].to].x,
                                 net.intersections[o[1].to].y)]
            if toward and self.rng.random() < self.cfg.downtown.stay_bias:
                options = toward
        weights = [self.turn_w[k] for k, _ in options]
        if sum(weights) <= 0:
            weights = [1.0] * len(options)
        return self.rng.choices([s for _, s in options], weights)[0]
