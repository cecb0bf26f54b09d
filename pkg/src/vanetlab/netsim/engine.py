"""Discrete-event engine and the structured event log."""
from __future__ import annotations

import heapq
import random

from ..errors import CausalityError

APP_SEND = "APP_SEND"
APP_RECV = "APP_RECV"
APP_DROP = "APP_DROP"
RT_SEND = "RT_SEND"
RT_DROP = "RT_DROP"
MAC_DROP = "MAC_DROP"

LOG_KINDS = (APP_SEND, APP_RECV, APP_DROP, RT_SEND, RT_DROP, MAC_DROP)


class SimEvent:
    __slots__ = ("time", "sequence", "target", "fn", "args", "cancelled")

    def __init__(self, time, sequence, target, fn, args):
        self.time = time
        self.sequence = sequence
        self.target = target
        self.fn = fn
        self.args = args
        self.cancelled = False

    def __repr__(self):
        name = getattr(self.fn, "__name__", self.fn)
        return f"SimEvent(t={self.time:.6f}, seq={self.sequence}, target={self.target}, {name})"


class Engine:
    """Single-threaded event loop; events run in (time, sequence) order.

    ``rng`` is the only source of randomness inside a run.
    """

    def __init__(self, duration, seed=0):
        self.duration = duration
        self.now = 0.0
        self.rng = random.Random(seed)
        self._heap = []
        self._seq = 0
        self.executed = 0

    def schedule(self, time, fn, *args, target=None):
        time = float(time)
        if time < self.now:
            raise CausalityError(f"event at {time} scheduled while now={self.now}")
        self._seq += 1
        ev = SimEvent(time, self._seq, target, fn, args)
        heapq.heappush(self._heap, (time, self._seq, ev))
        return ev

    @staticmethod
    def cancel(ev):
        if ev is not None:
            ev.cancelled = True

    def run(self, until=None):
        horizon = self.duration if until is None else min(until, self.duration)
        heap = self._heap
        pop = heapq.heappop
        while heap:
            if heap[0][0] > horizon:
                break
            t, _, ev = pop(heap)
            if ev.cancelled:
                continue
            if t < self.now:
                raise CausalityError(f"event at {t} executed after {self.now}")
            self.now = t
            self.executed += 1
            ev.fn(*ev.args)
        if until is None or until >= self.duration:
            self.now = max(self.now, horizon)

    def pending(self):
        return sum(1 for _, _, ev in self._heap if not ev.cancelled)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


class EventLog:
    """Append-only record of application, routing and MAC events.

    Each record is ``(time, kind, node, *fields)``; the text form puts one
    record per line with six-decimal times.
    """

    def __init__(self):
        self.records = []

    def add(self, time, kind, node, *fields):
        self.records.append((time, kind, node) + fields)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def of_kind(self, kind):
        return [r for r in self.records if r[1] == kind]

    def to_text(self):
        return "".join(f"{r[0]:.6f} {r[1]} {r[2]}"
                       + "".join(" " + _fmt(f) for f in r[3:]) + "\n"
                       for r in self.records)

    @classmethod
    def from_text(cls, text):
        log = cls()
        for line in text.splitlines():
            if not line.strip():
                continue
            parts = line.split()
            fields = []
            for p in parts[3:]:
                try:
                    fields.append(int(p))
                except ValueError:
                    try:
                        fields.append(float(p))
                    except ValueError:
                        fields.append(p)
            log.records.append((float(parts[0]), parts[1], int(parts[2])) + tuple(fields))
        return log
