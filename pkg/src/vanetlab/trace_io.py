"""ns-2 movement-trace reader/writer.

Recognised directives::

    $node_(i) set X_ <x>                                 initial position (X, Y, Z)
    $ns_ at <t> "$node_(i) setdest <x> <y> <speed>"      motion leg
    $ns_ at <t> "$node_(i) set X_ <x>"                   timed reposition (wrap-around)

All numbers are written with six decimals. Dwells are implicit: a node
that reached its destination waits there until its next directive.
"""
from __future__ import annotations

import math
import re
from typing import NamedTuple

from .errors import TraceParseError, TraceSemanticError
from .mobility.base import TraceSet, Waypoint

_INIT = re.compile(r'^\$node_\((\d+)\)\s+set\s+([XYZ])_\s+(\S+)$')
_SETDEST = re.compile(
    r'^\$ns_\s+at\s+(\S+)\s+"\$node_\((\d+)\)\s+setdest\s+(\S+)\s+(\S+)\s+(\S+)"$')
_TIMED_SET = re.compile(r'^\$ns_\s+at\s+(\S+)\s+"\$node_\((\d+)\)\s+set\s+([XYZ])_\s+(\S+)"$')

# Arrival times derived from distance / printed speed are snapped back onto
# the millisecond grid that generated traces use, when they land this close.
SNAP_TOLERANCE = 1e-4


class InitialPosition(NamedTuple):
    node: int
    axis: str
    value: float
    lineno: int = 0


class Motion(NamedTuple):
    time: float
    node: int
    dest_x: float
    dest_y: float
    speed: float
    lineno: int = 0


class Reposition(NamedTuple):
    time: float
    node: int
    axis: str
    value: float
    lineno: int = 0


def _f(v):
    return f"{v:.6f}"


def trace_directives(ts: TraceSet) -> list:
    """TraceSet -> ordered directive list (the in-memory trace document)."""
    init = []
    timed = []
    for i, wps in enumerate(ts.vehicles):
        w0 = wps[0]
        init += [InitialPosition(i, "X", w0.x), InitialPosition(i, "Y", w0.y),
                 InitialPosition(i, "Z", 0.0)]
        seq = 0
        for w, nxt in zip(wps, wps[1:]):
            if nxt.t == w.t:
                if (nxt.x, nxt.y) != (w.x, w.y):
                    timed.append((w.t, i, seq, Reposition(w.t, i, "X", nxt.x)))
                    timed.append((w.t, i, seq + 1, Reposition(w.t, i, "Y", nxt.y)))
                    seq += 2
            elif w.speed > 0:
                timed.append((w.t, i, seq, Motion(w.t, i, nxt.x, nxt.y, w.speed)))
                seq += 1
    timed.sort(key=lambda e: e[:3])
    return init + [e[3] for e in timed]


def format_directive(d) -> str:
    if isinstance(d, InitialPosition):
        return f"$node_({d.node}) set {d.axis}_ {_f(d.value)}"
    if isinstance(d, Motion):
        return (f'$ns_ at {_f(d.time)} "$node_({d.node}) setdest '
                f'{_f(d.dest_x)} {_f(d.dest_y)} {_f(d.speed)}"')
    return f'$ns_ at {_f(d.time)} "$node_({d.node}) set {d.axis}_ {_f(d.value)}"'


def write_trace(ts: TraceSet) -> str:
    lines = [format_directive(d) for d in trace_directives(ts)]
    return "".join(line + "\n" for line in lines)


def _num(tok, lineno):
    try:
        v = float(tok)
    except ValueError:
        raise TraceParseError(lineno, f"not a number: {tok!r}") from None
    if not math.isfinite(v):
        raise TraceParseError(lineno, f"not a finite number: {tok!r}")
    return v


def _node(tok, lineno):
    return int(tok)


def parse_directives(text: str) -> list:
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _INIT.match(line)
        if m:
            out.append(InitialPosition(int(m.group(1)), m.group(2), _num(m.group(3), lineno),
                                       lineno))
            continue
        m = _SETDEST.match(line)
        if m:
            t, node, x, y, s = m.groups()
            out.append(Motion(_num(t, lineno), int(node), _num(x, lineno), _num(y, lineno),
                              _num(s, lineno), lineno))
            continue
        m = _TIMED_SET.match(line)
        if m:
            t, node, axis, v = m.groups()
            out.append(Reposition(_num(t, lineno), int(node), axis, _num(v, lineno), lineno))
            continue
        raise TraceParseError(lineno, f"unrecognised directive: {line!r}")
    return out


def _snap(t):
    r = round(t * 1000.0) / 1000.0
    return r if abs(r - t) <= SNAP_TOLERANCE else t


class _NodeBuilder:
    def __init__(self):
        self.x = self.y = None
        self.wps = None
        self.leg = None  # (t0, x0, y0, dest_x, dest_y, speed, t_arrive)
        self.jump_t = None

    def start(self):
        self.wps = [Waypoint(0.0, self.x, self.y, 0.0)]

    def settle(self, t):
        """Bring the node to its position at time ``t`` (ending or cutting the open leg)."""
        if self.leg is None:
            return
        t0, x0, y0, dx, dy, s, ta = self.leg
        if t < ta:
            f = (t - t0) / (ta - t0)
            self.wps.append(Waypoint(t, x0 + (dx - x0) * f, y0 + (dy - y0) * f, 0.0))
        else:
            self.wps.append(Waypoint(ta, dx, dy, 0.0))
        self.leg = None

    def mark(self, t):
        last = self.wps[-1]
        if last.t < t:
            self.wps.append(Waypoint(t, last.x, last.y, 0.0))

    def motion(self, d):
        self.settle(d.time)
        self.mark(d.time)
        last = self.wps[-1]
        dist = math.hypot(d.dest_x - last.x, d.dest_y - last.y)
        self.jump_t = None
        if dist == 0.0:
            return
        self.wps[-1] = last._replace(speed=d.speed)
        ta = _snap(d.time + dist / d.speed)
        self.leg = (d.time, last.x, last.y, d.dest_x, d.dest_y, d.speed, ta)

    def reposition(self, d):
        self.settle(d.time)
        self.mark(d.time)
        last = self.wps[-1]
        if self.jump_t == d.time and len(self.wps) > 1 and self.wps[-2].t == d.time:
            self.wps[-1] = last._replace(**{d.axis.lower(): d.value})
            return
        if d.axis == "Z":
            return
        nx = d.value if d.axis == "X" else last.x
        ny = d.value if d.axis == "Y" else last.y
        self.wps.append(Waypoint(d.time, nx, ny, 0.0))
        self.jump_t = d.time

    def finish(self, duration):
        if self.leg is not None:
            self.settle(min(self.leg[6], duration))
        wps = [w for w in self.wps if w.t <= duration]
        if wps[-1].t < duration:
            wps.append(Waypoint(duration, wps[-1].x, wps[-1].y, 0.0))
        return wps


def parse_trace(text: str, duration=None, area=None) -> TraceSet:
    """Rebuild a TraceSet from ns-2 movement text.

    ``duration`` defaults to the time of the last arrival or directive; ``area``
    defaults to the bounding box of all positions. A motion directive issued
    while a previous leg is still under way preempts it from its timestamp.
    """
    directives = parse_directives(text)
    nodes = {}
    for d in directives:
        b = nodes.setdefault(d.node, _NodeBuilder())
        if isinstance(d, InitialPosition):
            if b.wps is not None:
                raise TraceSemanticError(d.lineno, "initial position after motion began")
            if d.axis == "X":
                b.x = d.value
            elif d.axis == "Y":
                b.y = d.value
            continue
        if b.wps is None:
            if b.x is None or b.y is None:
                raise TraceSemanticError(d.lineno, f"node {d.node} moves before its "
                                                   "initial position is set")
            b.start()
        if d.time < 0:
            raise TraceSemanticError(d.lineno, "negative time")
        if d.time < b.wps[-1].t or (b.leg is not None and d.time < b.leg[0]):
            raise TraceSemanticError(d.lineno, "directives for a node must be time-ordered")
        if isinstance(d, Motion):
            if d.speed <= 0:
                raise TraceSemanticError(d.lineno, "setdest speed must be positive")
            b.motion(d)
        else:
            b.reposition(d)

    if not nodes:
        return TraceSet(area[0] if area else 0.0, area[1] if area else 0.0,
                        duration if duration is not None else 0.0, [], [])
    if sorted(nodes) != list(range(len(nodes))):
        raise TraceSemanticError(0, "node ids must be contiguous from 0")
    for i, b in nodes.items():
        if b.x is None or b.y is None:
            raise TraceSemanticError(0, f"node {i} has no initial position")
        if b.wps is None:
            b.start()

    if duration is None:
        duration = 0.0
        for b in nodes.values():
            duration = max(duration, b.wps[-1].t, b.leg[6] if b.leg else 0.0)
    vehicles = [nodes[i].finish(duration) for i in range(len(nodes))]
    if area is None:
        area = (max(w.x for v in vehicles for w in v), max(w.y for v in vehicles for w in v))
    return TraceSet(float(area[0]), float(area[1]), float(duration), vehicles, [])
