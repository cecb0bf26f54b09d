"""Trace types, configuration and interpolation shared by every mobility model."""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from ..errors import InvalidConfigError, OutOfRangeError
from ..road_network import RoadNetwork, quantize_pos, quantize_time

MODELS = ("SM", "MM", "DM", "FLOW")


class Waypoint(NamedTuple):
    t: float
    x: float
    y: float
    speed: float  # toward the next waypoint; 0 means dwell


class DamageEvent(NamedTuple):
    vehicle: int
    start: float
    duration: float
    x: float
    y: float


@dataclass(frozen=True)
class Downtown:
    rect: Optional[tuple] = None  # (x0, y0, x1, y1); None -> centered third of the area
    density_fraction: float = 0.7
    speed_factor: float = 0.5
    stay_bias: float = 0.8

    def resolve(self, width, height):
        if self.rect is not None:
            return tuple(float(v) for v in self.rect)
        return (width / 3.0, height / 3.0, 2.0 * width / 3.0, 2.0 * height / 3.0)


@dataclass(frozen=True)
class Damage:
    p_damage: float = 0.0
    repair_time: float = 60.0


@dataclass(frozen=True)
class MobilityConfig:
    model: str
    n_vehicles: int
    duration: float
    net: RoadNetwork
    max_speed: float = 40.0
    min_speed: float = 5.0
    seed: int = 0
    downtown: Optional[Downtown] = None
    damage: Optional[Damage] = None
    turn_probs: tuple = (0.25, 0.25, 0.5)  # left, right, straight
    # FLOW only
    tick: float = 0.5
    gap_min: float = 2.0
    headway: float = 1.5
    flow_signals: bool = True
    signal_period: float = 60.0
    green_fraction: float = 0.5

    def validate(self, model=None):
        if self.model not in MODELS:
            raise InvalidConfigError(f"unknown model {self.model!r}")
        if model is not None and self.model != model:
            raise InvalidConfigError(f"expected model {model}, got {self.model}")
        if self.n_vehicles < 1:
            raise InvalidConfigError("n_vehicles must be >= 1")
        if not 0 < self.min_speed <= self.max_speed:
            raise InvalidConfigError("need 0 < min_speed <= max_speed")
        if self.duration <= 0:
            raise InvalidConfigError("duration must be positive")
        if self.downtown is not None:
            d = self.downtown
            if not 0.0 <= d.density_fraction <= 1.0:
                raise InvalidConfigError("density_fraction must lie in [0, 1]")
            if not 0.0 < d.speed_factor <= 1.0:
                raise InvalidConfigError("downtown speed factor must lie in (0, 1]")
            x0, y0, x1, y1 = d.resolve(self.net.area_width, self.net.area_height)
            if not (0 <= x0 < x1 <= self.net.area_width and 0 <= y0 < y1 <= self.net.area_height):
                raise InvalidConfigError("downtown rectangle must lie inside the area")
        if self.damage is not None:
            if not 0.0 <= self.damage.p_damage <= 1.0:
                raise InvalidConfigError("p_damage must lie in [0, 1]")
            if self.damage.p_damage > 0 and not 0 < self.damage.repair_time < self.duration:
                raise InvalidConfigError("repair_time must lie in (0, duration)")
        if len(self.turn_probs) != 3 or min(self.turn_probs) < 0 or sum(self.turn_probs) <= 0:
            raise InvalidConfigError("turn_probs must be three non-negative weights")
        if self.tick <= 0 or self.gap_min < 0 or self.headway < 0:
            raise InvalidConfigError("invalid car-following parameters")


@dataclass
class TraceSet:
    area_width: float
    area_height: float
    duration: float
    vehicles: list
    damage_events: list = field(default_factory=list)

    def __post_init__(self):
        self._times = {}

    def __eq__(self, other):
        if not isinstance(other, TraceSet):
            return NotImplemented
        return (self.area_width, self.area_height, self.duration, self.vehicles,
                self.damage_events) == (other.area_width, other.area_height,
                                        other.duration, other.vehicles, other.damage_events)

    @property
    def n_vehicles(self):
        return len(self.vehicles)

    def times(self, v):
        ts = self._times.get(v)
        if ts is None:
            ts = self._times[v] = [w.t for w in self.vehicles[v]]
        return ts

    def position_at(self, v, t):
        if t < 0 or t > self.duration + 1e-9:
            raise OutOfRangeError(f"t={t} outside [0, {self.duration}]")
        return _interp(self.vehicles[v], self.times(v), t)


def position_at(waypoints, t, duration=None):
    """(x, y, speed) of a piecewise-linear trace at time ``t``.

    Two waypoints sharing a timestamp encode an instantaneous reposition
    (toroidal wrap); the later one wins at that instant.
    """
    if duration is None:
        duration = waypoints[-1].t
    if t < 0 or t > duration + 1e-9:
        raise OutOfRangeError(f"t={t} outside [0, {duration}]")
    return _interp(waypoints, [w.t for w in waypoints], t)


def _interp(wps, times, t):
    i = bisect_right(times, t) - 1
    if i < 0:
        i = 0
    w = wps[i]
    if i == len(wps) - 1 or w.speed == 0.0:
        return (w.x, w.y, 0.0)
    nxt = wps[i + 1]
    f = (t - w.t) / (nxt.t - w.t)
    return (w.x + (nxt.x - w.x) * f, w.y + (nxt.y - w.y) * f, w.speed)


def ceil_ms(dt):
    return max(0.001, math.ceil(dt * 1000.0 - 1e-6) / 1000.0)


class Track:
    """Incremental builder for one vehicle's waypoint list.

    Leg end times are rounded up to whole milliseconds and positions to
    micrometres, and each leg's speed is recomputed from the rounded values,
    so the trace survives the 6-decimal text format exactly.
    """

    def __init__(self, x, y, duration):
        x, y = quantize_pos(x), quantize_pos(y)
        self.wps = [Waypoint(0.0, x, y, 0.0)]
        self.t = 0.0
        self.x = x
        self.y = y
        self.duration = duration
        self.done = duration <= 0

    def _set_last_speed(self, speed):
        self.wps[-1] = self.wps[-1]._replace(speed=speed)

    def move_to(self, x, y, speed):
        """Drive in a straight line at (at most) ``speed``; returns the arrival time."""
        if self.done:
            return self.t
        x, y = quantize_pos(x), quantize_pos(y)
        d = math.hypot(x - self.x, y - self.y)
        if d == 0.0:
            return self.t
        t1 = quantize_time(self.t + ceil_ms(d / speed))
        if t1 > self.duration:
            span = self.duration - self.t
            if span <= 0:
                self.done = True
                return self.t
            f = span / (t1 - self.t)
            px = quantize_pos(self.x + (x - self.x) * f)
            py = quantize_pos(self.y + (y - self.y) * f)
            dd = math.hypot(px - self.x, py - self.y)
            if dd > 0:
                self._set_last_speed(dd / span)
            self.wps.append(Waypoint(self.duration, px, py, 0.0))
            self.t, self.x, self.y = self.duration, px, py
            self.done = True
            return self.t
        self._set_last_speed(d / (t1 - self.t))
        self.wps.append(Waypoint(t1, x, y, 0.0))
        self.t, self.x, self.y = t1, x, y
        return t1

    def dwell_until(self, t_end):
        if self.done:
            return
        t_end = quantize_time(t_end)
        if t_end <= self.t:
            return
        if t_end >= self.duration:
            self.finish()
            return
        self.wps.append(Waypoint(t_end, self.x, self.y, 0.0))
        self.t = t_end

    def jump_to(self, x, y):
        if self.done:
            return
        x, y = quantize_pos(x), quantize_pos(y)
        self.wps.append(Waypoint(self.t, x, y, 0.0))
        self.x, self.y = x, y

    def finish(self):
        if self.wps[-1].t < self.duration:
            self.wps.append(Waypoint(self.duration, self.x, self.y, 0.0))
            self.t = self.duration
        self.done = True
        return self.wps
