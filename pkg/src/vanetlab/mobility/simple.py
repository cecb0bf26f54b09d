"""CityMob Simple Model: straight streets, constant heading, no semaphores."""
from __future__ import annotations

import random

from .base import MobilityConfig, Track, TraceSet


def simple_track(x0, y0, heading, speed, width, height, duration):
    """Constant-velocity motion along one axis, wrapping toroidally at the edges.

    ``heading`` is one of (1, 0), (-1, 0), (0, 1), (0, -1).
    """
    hx, hy = heading
    tr = Track(x0, y0, duration)
    while not tr.done:
        if hx > 0:
            edge, reentry = (width, tr.y), (0.0, tr.y)
        elif hx < 0:
            edge, reentry = (0.0, tr.y), (width, tr.y)
        elif hy > 0:
            edge, reentry = (tr.x, height), (tr.x, 0.0)
        else:
            edge, reentry = (tr.x, 0.0), (tr.x, height)
        tr.move_to(edge[0], edge[1], speed)
        if tr.done:
            break
        tr.jump_to(*reentry)
    return tr.finish()


def generate_simple(cfg: MobilityConfig) -> TraceSet:
    cfg.validate("SM")
    net = cfg.net
    W, H = net.area_width, net.area_height
    rng = random.Random(cfg.seed)
    vehicles = []
    for _ in range(cfg.n_vehicles):
        horizontal = rng.random() < 0.5
        sign = 1 if rng.random() < 0.5 else -1
        speed = rng.uniform(cfg.min_speed, cfg.max_speed)
        if horizontal:
            y0 = rng.choice(net.y_coords)
            x0 = _interior(rng.uniform(0.0, W), W)
            heading = (sign, 0)
        else:
            x0 = rng.choice(net.x_coords)
            y0 = _interior(rng.uniform(0.0, H), H)
            heading = (0, sign)
        vehicles.append(simple_track(x0, y0, heading, speed, W, H, cfg.duration))
    return TraceSet(W, H, cfg.duration, vehicles, [])


def _interior(v, limit):
    v = round(v, 6)
    return v if 0.0 < v < limit else limit / 2.0
