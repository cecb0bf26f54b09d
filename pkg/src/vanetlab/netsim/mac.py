"""Simplified 802.11 DCF: carrier sense, slotted backoff, ACK and retries.

No RTS/CTS, NAV or EIFS. Backoff counters freeze while the medium is busy
and resume after it has been idle for DIFS.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from ..errors import InvalidConfigError
from .engine import MAC_DROP

DATA = "DATA"
ACK = "ACK"
BCAST = "BROADCAST"

MAC_HEADER = 28
ACK_SIZE = 14

IDLE, BACKOFF, TX, WAIT_ACK = range(4)

_EPS = 1e-12


@dataclass(frozen=True)
class MacParams:
    difs: float = 50e-6
    sifs: float = 10e-6
    slot: float = 20e-6
    cw_min: int = 31
    cw_max: int = 1023
    retry_limit: int = 7
    queue_limit: int = 50

    def __post_init__(self):
        if min(self.difs, self.sifs, self.slot) <= 0 or self.cw_min < 0 \
                or self.cw_max < self.cw_min or self.retry_limit < 0 or self.queue_limit < 1:
            raise InvalidConfigError("invalid MAC parameters")


class Frame:
    __slots__ = ("kind", "src", "dst", "size", "payload", "uid", "priority")

    def __init__(self, kind, src, dst, size, payload=None, uid=0, priority=False):
        if size < MAC_HEADER and kind != ACK:
            raise InvalidConfigError(f"frame size {size} below the MAC header floor")
        self.kind = kind
        self.src = src
        self.dst = dst
        self.size = size
        self.payload = payload
        self.uid = uid
        self.priority = priority

    def __repr__(self):
        return f"Frame({self.kind}, {self.src}->{self.dst}, {self.size}B, uid={self.uid})"


class Mac:
    """Per-node MAC. ``upper`` gets ``mac_receive(frame)`` and
    ``mac_done(frame, ok)``; a failed unicast is the link-break signal."""

    def __init__(self, node, engine, channel, log, params=MacParams()):
        self.node = node
        self.engine = engine
        self.channel = channel
        self.log = log
        self.p = params
        self.upper = None
        self.ctrl_q = deque()
        self.data_q = deque()
        self.current = None
        self.state = IDLE
        self.cw = params.cw_min
        self.retries = 0
        self.slots = 0
        self.countdown_start = None
        self.fire_at = None
        self.timer = None
        self.last_seen = {}  # src -> uid of last unicast passed up
        self.ack_air = channel.airtime(ACK_SIZE)
        self.delivered = 0
        self.dropped = 0
        channel.attach(node, self)

    # -- queueing ---------------------------------------------------------
    def queue_len(self):
        return len(self.ctrl_q) + len(self.data_q)

    def send(self, frame):
        if self.queue_len() >= self.p.queue_limit:
            self._log_drop(frame, "ifq-full")
            return False
        (self.ctrl_q if frame.priority else self.data_q).append(frame)
        if self.state == IDLE:
            self._next(fresh=True)
        return True

    def is_pending(self, frame):
        """True while ``frame`` is queued or still contending (not yet on the air)."""
        if frame is self.current:
            return self.state == BACKOFF
        return any(f is frame for f in self.ctrl_q) or any(f is frame for f in self.data_q)

    def purge(self, next_hop):
        """Remove and return queued (not in-flight) frames addressed to ``next_hop``."""
        out = []
        for q in (self.ctrl_q, self.data_q):
            keep = deque()
            for f in q:
                (out if f.dst == next_hop else keep).append(f)
            q.clear()
            q.extend(keep)
        return out

    def _log_drop(self, frame, reason):
        self.dropped += 1
        self.log.add(self.engine.now, MAC_DROP, self.node, reason, frame.dst, frame.uid,
                     frame.size)

    # -- contention -------------------------------------------------------
    def _next(self, fresh=False):
        if self.current is None:
            if self.ctrl_q:
                self.current = self.ctrl_q.popleft()
            elif self.data_q:
                self.current = self.data_q.popleft()
            else:
                self.state = IDLE
                self.channel.contending.discard(self.node)
                return
        ch = self.channel
        now = self.engine.now
        if fresh and max(ch.sig_end[self.node], ch.tx_end[self.node]) + self.p.difs <= now:
            # medium already idle for DIFS when the frame arrived: no backoff
            self.state = BACKOFF
            ch.contending.add(self.node)
            self.slots = 0
            self._resume()
            return
        self._start_backoff()

    def _start_backoff(self):
        self.state = BACKOFF
        self.channel.contending.add(self.node)
        self.slots = self.engine.rng.randint(0, self.cw)
        self._resume()

    def _schedule(self, t, fn):
        self.engine.cancel(self.timer)
        self.timer = self.engine.schedule(t, fn, target=self.node)

    def _resume(self):
        now = self.engine.now
        ch = self.channel
        busy_until = max(ch.sig_end[self.node], ch.tx_end[self.node])
        if busy_until + self.p.difs > now + _EPS:
            self.countdown_start = None
            self.fire_at = None
            self._schedule(busy_until + self.p.difs, self._resume)
            return
        self.countdown_start = now
        self.fire_at = now + self.slots * self.p.slot
        self._schedule(self.fire_at, self._fire)

    def medium_busy(self, now):
        """Carrier went busy at ``now``: freeze the backoff counter."""
        if self.state != BACKOFF or self.countdown_start is None:
            return  # not counting down; the pending resume re-checks the medium
        if self.fire_at <= now + _EPS:
            return  # already committed to transmit in this slot
        ch = self.channel
        self._defer(now, max(ch.sig_end[self.node], ch.tx_end[self.node], now))

    def _defer(self, now, busy_until):
        if self.countdown_start is not None:
            done = int((now - self.countdown_start) / self.p.slot + 1e-9)
            self.slots = max(0, self.slots - done)
            self.countdown_start = None
            self.fire_at = None
            self._schedule(busy_until + self.p.difs, self._resume)
        elif self.timer is None or self.timer.time < busy_until + self.p.difs:
            self._schedule(busy_until + self.p.difs, self._resume)

    def _fire(self):
        self.timer = None
        self.fire_at = None
        self.countdown_start = None
        if self.channel.tx_end[self.node] > self.engine.now:
            # still sending an ACK; contend again afterwards
            self._schedule(self.channel.tx_end[self.node] + self.p.difs, self._resume)
            return
        self.state = TX
        self.channel.contending.discard(self.node)
        self.channel.transmit(self.node, self.current)

    def tx_finished(self, tx):
        frame = tx.frame
        if frame.kind == ACK or frame is not self.current:
            return
        if frame.kind == BCAST:
            self._complete(True)
            return
        self.state = WAIT_ACK
        self._schedule(self.engine.now + self.p.sifs + self.ack_air + self.p.slot,
                       self._ack_timeout)

    def _ack_timeout(self):
        self.timer = None
        self.retries += 1
        if self.retries > self.p.retry_limit:
            self._log_drop(self.current, "retry-limit")
            self._complete(False)
            return
        self.cw = min(2 * self.cw + 1, self.p.cw_max)
        self._start_backoff()

    def _complete(self, ok):
        frame = self.current
        self.current = None
        self.cw = self.p.cw_min
        self.retries = 0
        # stay non-idle during the upcall so a send() from there only enqueues
        self.state = TX
        if ok:
            self.delivered += 1
        if self.upper is not None:
            self.upper.mac_done(frame, ok)
        self._next()

    # -- reception --------------------------------------------------------
    def receive(self, frame, tx):
        if frame.kind == ACK:
            if (self.state == WAIT_ACK and self.current is not None
                    and frame.uid == self.current.uid and frame.src == self.current.dst):
                self.engine.cancel(self.timer)
                self.timer = None
                self._complete(True)
            return
        if frame.kind == BCAST:
            if self.upper is not None:
                self.upper.mac_receive(frame)
            return
        if frame.dst != self.node:
            return
        now = self.engine.now
        ack = Frame(ACK, self.node, frame.src, ACK_SIZE, None, frame.uid)
        self.engine.schedule(now + self.p.sifs, self._send_ack, ack, target=self.node)
        if self.state == BACKOFF:
            # our own ACK will occupy the medium; keep the backoff frozen
            self._defer(now, now + self.p.sifs + self.ack_air)
        if self.last_seen.get(frame.src) == frame.uid:
            return  # retransmission of something we already passed up
        self.last_seen[frame.src] = frame.uid
        if self.upper is not None:
            self.upper.mac_receive(frame)

    def _send_ack(self, ack):
        if self.channel.tx_end[self.node] > self.engine.now:
            return
        self.channel.transmit(self.node, ack)
