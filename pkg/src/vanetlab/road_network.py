"""Grid road topology: intersections, directed lane segments, speed limits, semaphores."""
from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Optional

from .errors import InvalidConfigError, NoRouteError

GREEN = "green"
RED = "red"

AXIS_X = "x"  # horizontal streets (constant y)
AXIS_Y = "y"  # vertical streets (constant x)


def quantize_time(t: float) -> float:
    """Snap a time to the 1 ms grid every generated trace lives on."""
    return round(t * 1000.0) / 1000.0


def quantize_pos(v: float) -> float:
    return round(v, 6)


@dataclass(frozen=True)
class Intersection:
    id: int
    x: float
    y: float
    i: int
    j: int


@dataclass(frozen=True)
class Segment:
    id: int
    from_: int
    to: int
    length: float
    speed_limit: float
    lane_count: int = 1
    axis: str = AXIS_X

    @property
    def street(self) -> int:
        """Index of the undirected street this lane belongs to."""
        return self.id // 2


@dataclass(frozen=True)
class SemaphoreSpec:
    period: float
    green_fraction: float
    phase_offset: float
    favored_axis: str
    intersection: Optional[int] = None
    segment: Optional[int] = None
    offset: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.green_fraction < 1.0:
            raise InvalidConfigError("green_fraction must lie in (0, 1)")
        if self.period <= 0:
            raise InvalidConfigError("period must be positive")
        if not 0.0 <= self.phase_offset < self.period:
            raise InvalidConfigError("phase_offset must lie in [0, period)")
        if (self.intersection is None) == (self.segment is None):
            raise InvalidConfigError("semaphore needs exactly one of intersection / segment")
        if self.favored_axis not in (AXIS_X, AXIS_Y):
            raise InvalidConfigError(f"unknown axis {self.favored_axis!r}")

    @property
    def midstreet(self) -> bool:
        return self.segment is not None


@dataclass(frozen=True)
class Route:
    segments: tuple
    cost: float
    length: float

    def __len__(self):
        return len(self.segments)


@dataclass(frozen=True)
class RoadNetwork:
    area_width: float
    area_height: float
    blocks_x: int
    blocks_y: int
    intersections: tuple
    segments: tuple
    semaphores: tuple = field(default=())

    @property
    def pitch_x(self) -> float:
        return self.area_width / self.blocks_x

    @property
    def pitch_y(self) -> float:
        return self.area_height / self.blocks_y

    def intersection_id(self, i: int, j: int) -> int:
        return j * (self.blocks_x + 1) + i

    @cached_property
    def out_segments(self) -> dict:
        out = {n.id: [] for n in self.intersections}
        for s in self.segments:
            out[s.from_].append(s)
        for lst in out.values():
            lst.sort(key=lambda s: s.to)
        return out

    @cached_property
    def in_segments(self) -> dict:
        inc = {n.id: [] for n in self.intersections}
        for s in self.segments:
            inc[s.to].append(s)
        return inc

    @cached_property
    def segment_between(self) -> dict:
        return {(s.from_, s.to): s for s in self.segments}

    @cached_property
    def intersection_lights(self) -> dict:
        return {sp.intersection: sp for sp in self.semaphores if sp.intersection is not None}

    @cached_property
    def street_lights(self) -> dict:
        """street index -> mid-street semaphore (offset from the even lane's origin)."""
        return {self.segments[sp.segment].street: sp for sp in self.semaphores if sp.midstreet}

    @property
    def x_coords(self) -> list:
        return [i * self.pitch_x for i in range(self.blocks_x + 1)]

    @property
    def y_coords(self) -> list:
        return [j * self.pitch_y for j in range(self.blocks_y + 1)]

    def point_on(self, seg: Segment, offset: float) -> tuple:
        a = self.intersections[seg.from_]
        b = self.intersections[seg.to]
        f = offset / seg.length
        return (a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f)


def build_grid(blocks_x: int, blocks_y: int, area_width: float, area_height: float,
               speed_limit: float) -> RoadNetwork:
    """Build a two-way Manhattan grid with one lane per direction.

    Segments come in pairs: ``2k`` runs left-to-right / bottom-to-top along
    street ``k`` and ``2k + 1`` is its reverse lane.
    """
    if blocks_x < 1 or blocks_y < 1:
        raise InvalidConfigError("grid needs at least one block per axis")
    if area_width <= 0 or area_height <= 0:
        raise InvalidConfigError("area dimensions must be positive")
    if speed_limit <= 0:
        raise InvalidConfigError("speed_limit must be positive")

    px = area_width / blocks_x
    py = area_height / blocks_y
    nodes = []
    for j in range(blocks_y + 1):
        for i in range(blocks_x + 1):
            nodes.append(Intersection(len(nodes), i * px, j * py, i, j))

    def nid(i, j):
        return j * (blocks_x + 1) + i

    segs = []
    for j in range(blocks_y + 1):
        for i in range(blocks_x):
            a, b = nid(i, j), nid(i + 1, j)
            segs.append(Segment(len(segs), a, b, px, speed_limit, 1, AXIS_X))
            segs.append(Segment(len(segs), b, a, px, speed_limit, 1, AXIS_X))
    for i in range(blocks_x + 1):
        for j in range(blocks_y):
            a, b = nid(i, j), nid(i, j + 1)
            segs.append(Segment(len(segs), a, b, py, speed_limit, 1, AXIS_Y))
            segs.append(Segment(len(segs), b, a, py, speed_limit, 1, AXIS_Y))

    return RoadNetwork(float(area_width), float(area_height), blocks_x, blocks_y,
                       tuple(nodes), tuple(segs))


def with_speed_limits(net: RoadNetwork, limits: dict) -> RoadNetwork:
    """Return a copy with per-segment speed limits overridden (segment id -> m/s)."""
    segs = []
    for s in net.segments:
        lim = limits.get(s.id, s.speed_limit)
        if lim <= 0:
            raise InvalidConfigError("speed limits must be positive")
        segs.append(replace(s, speed_limit=lim))
    return replace(net, segments=tuple(segs))


def _weight(seg: Segment, weight: str) -> float:
    if weight == "distance":
        return seg.length
    if weight == "travel_time":
        return seg.length / seg.speed_limit
    raise InvalidConfigError(f"unknown weight {weight!r}")


def shortest_route(net: RoadNetwork, from_: int, to: int, weight: str = "distance") -> Route:
    """Minimum-weight route as an ordered list of segment ids.

    Runs Dijkstra backwards from the destination, then walks forward taking,
    among all optimal continuations, the one whose next intersection id is
    smallest. That makes the choice between equal-cost paths deterministic.
    """
    n = len(net.intersections)
    if not (0 <= from_ < n and 0 <= to < n):
        raise InvalidConfigError("unknown intersection id")
    if from_ == to:
        return Route((), 0.0, 0.0)

    dist = _dist_to(net, to, weight)
    if dist[from_] == float("inf"):
        raise NoRouteError(f"no route from {from_} to {to}")

    path = []
    cur = from_
    total = length = 0.0
    while cur != to:
        best = None
        for s in net.out_segments[cur]:  # sorted by s.to
            c = _weight(s, weight) + dist[s.to]
            if abs(c - dist[cur]) <= 1e-9 * max(1.0, dist[cur]):
                best = s
                break
        path.append(best.id)
        total += _weight(best, weight)
        length += best.length
        cur = best.to
    return Route(tuple(path), total, length)


def _dist_to(net: RoadNetwork, target: int, weight: str) -> list:
    inf = float("inf")
    dist = [inf] * len(net.intersections)
    dist[target] = 0.0
    heap = [(0.0, target)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for s in net.in_segments[u]:
            nd = d + _weight(s, weight)
            if nd < dist[s.from_]:
                dist[s.from_] = nd
                heapq.heappush(heap, (nd, s.from_))
    return dist


def place_semaphores(net: RoadNetwork, p_intersection: float, p_midstreet: float,
                     period: float, seed: int, green_fraction: float = 0.5) -> RoadNetwork:
    """Randomly signalize intersections and mid-street points.

    The same number of draws is consumed per element regardless of the
    probabilities, so a placement depends only on (net, parameters, seed).
    """
    if not (0.0 <= p_intersection <= 1.0 and 0.0 <= p_midstreet <= 1.0):
        raise InvalidConfigError("probabilities must lie in [0, 1]")
    if period <= 0:
        raise InvalidConfigError("period must be positive")
    rng = random.Random(seed)
    specs = []
    for node in net.intersections:
        u, phase, axis = rng.random(), rng.random(), rng.random()
        if u < p_intersection:
            specs.append(SemaphoreSpec(period, green_fraction, _phase(phase, period),
                                       AXIS_X if axis < 0.5 else AXIS_Y,
                                       intersection=node.id))
    for seg in net.segments[::2]:
        u, phase, axis, off = rng.random(), rng.random(), rng.random(), rng.random()
        if u < p_midstreet:
            offset = quantize_pos(seg.length * (0.05 + 0.9 * off))
            specs.append(SemaphoreSpec(period, green_fraction, _phase(phase, period),
                                       AXIS_X if axis < 0.5 else AXIS_Y,
                                       segment=seg.id, offset=offset))
    return replace(net, semaphores=tuple(specs))


def _phase(u, period):
    ph = quantize_time(u * period)
    return 0.0 if ph >= period else ph


def checkerboard_semaphores(net: RoadNetwork, period: float = 60.0,
                            green_fraction: float = 0.5) -> RoadNetwork:
    """Signalize every intersection, alternating the favored axis like a checkerboard."""
    specs = [SemaphoreSpec(period, green_fraction, 0.0,
                           AXIS_X if (n.i + n.j) % 2 == 0 else AXIS_Y, intersection=n.id)
             for n in net.intersections]
    return replace(net, semaphores=tuple(specs))


def _cycle_pos(spec: SemaphoreSpec, t: float) -> float:
    phase = (t - spec.phase_offset) % spec.period
    # float modulo of a tiny negative value can round up to the period itself
    return 0.0 if phase >= spec.period else phase


def semaphore_state(spec: SemaphoreSpec, t: float, approach_axis: str) -> str:
    phase = _cycle_pos(spec, t)
    favored_green = phase < spec.green_fraction * spec.period
    if approach_axis == spec.favored_axis:
        return GREEN if favored_green else RED
    return RED if favored_green else GREEN


def red_remaining(spec: SemaphoreSpec, t: float, approach_axis: str) -> float:
    """Seconds until ``approach_axis`` turns green; 0 when already green."""
    phase = _cycle_pos(spec, t)
    split = spec.green_fraction * spec.period
    if approach_axis == spec.favored_axis:
        return 0.0 if phase < split else spec.period - phase
    return split - phase if phase < split else 0.0


def dump_network(net: RoadNetwork) -> str:
    lines = [f"I {n.id} {n.x:.3f} {n.y:.3f}" for n in net.intersections]
    lines += [f"S {s.id} {s.from_} {s.to} {s.speed_limit:.3f}" for s in net.segments]
    for sp in net.semaphores:
        if sp.midstreet:
            loc = f"S {sp.segment} {sp.offset:.3f}"
        else:
            loc = f"I {sp.intersection} -"
        lines.append(f"L {loc} {sp.period:.3f} {sp.green_fraction:.3f} "
                     f"{sp.phase_offset:.3f} {sp.favored_axis}")
    return "\n".join(lines) + "\n"
