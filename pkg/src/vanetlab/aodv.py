"""AODV routing agent: on-demand discovery, route maintenance and RERR handling.

One :class:`AodvAgent` runs per node on top of its MAC. Link breaks are
detected only through MAC retry failures (no HELLO messages).
"""
from __future__ import annotations

from collections import deque
from typing import NamedTuple, Optional

from .netsim.channel import BROADCAST
from .netsim.engine import APP_DROP, APP_RECV, MAC_DROP, RT_DROP, RT_SEND
from .netsim.mac import BCAST, DATA, MAC_HEADER, Frame

ACTIVE_ROUTE_TIMEOUT = 3.0
NODE_TRAVERSAL_TIME = 0.04
NET_DIAMETER = 35
RREQ_RETRIES = 2
PATH_DISCOVERY_TIME = 3.0
MY_ROUTE_TIMEOUT = 2 * ACTIVE_ROUTE_TIMEOUT
DELETE_PERIOD = 2 * ACTIVE_ROUTE_TIMEOUT
TTL_SEQUENCE = (1, 3, 5, 7) + (NET_DIAMETER,) * RREQ_RETRIES
BUFFER_CAPACITY = 64
# rebroadcast delay: a fixed hold so one hop ring finishes before the next, plus jitter
BROADCAST_HOLD = 0.01
BROADCAST_JITTER = 0.01

RREQ_SIZE = 24
RREP_SIZE = 20
RERR_BASE = 8
RERR_PER_DEST = 8
IP_HEADER = 20

_MASK = 0xFFFFFFFF


def seq_inc(s: int) -> int:
    return (s + 1) & _MASK


def seq_newer(a: int, b: int) -> bool:
    """True when ``a`` is newer than ``b`` under signed 32-bit difference."""
    d = (a - b) & _MASK
    return d != 0 and d < 0x80000000


def seq_max(a: int, b: int) -> int:
    return a if not seq_newer(b, a) else b


def ring_timeout(ttl: int) -> float:
    return 2 * NODE_TRAVERSAL_TIME * (ttl + 2)


class Rreq(NamedTuple):
    rreq_id: int
    origin: int
    origin_seqno: int
    dest: int
    dest_seqno: Optional[int]  # None when unknown
    hop_count: int
    ttl: int


class Rrep(NamedTuple):
    origin: int
    dest: int
    dest_seqno: int
    hop_count: int
    lifetime: float


class Rerr(NamedTuple):
    unreachable: tuple  # ((dest, seqno), ...)


def control_size(msg) -> int:
    if isinstance(msg, Rreq):
        return RREQ_SIZE
    if isinstance(msg, Rrep):
        return RREP_SIZE
    return RERR_BASE + RERR_PER_DEST * len(msg.unreachable)


class DataPacket:
    __slots__ = ("uid", "src", "dst", "size", "created", "hops")

    def __init__(self, uid, src, dst, size, created):
        self.uid = uid
        self.src = src
        self.dst = dst
        self.size = size
        self.created = created
        self.hops = 0

    def __repr__(self):
        return f"DataPacket({self.uid}, {self.src}->{self.dst}, hops={self.hops})"


class RouteEntry:
    __slots__ = ("dest", "next_hop", "hop_count", "seqno", "valid_seqno", "lifetime",
                 "valid", "precursors", "invalid_since")

    def __init__(self, dest, next_hop, hop_count, seqno, valid_seqno, lifetime):
        self.dest = dest
        self.next_hop = next_hop
        self.hop_count = hop_count
        self.seqno = seqno
        self.valid_seqno = valid_seqno
        self.lifetime = lifetime
        self.valid = True
        self.precursors = set()
        self.invalid_since = None

    @property
    def state(self):
        return "valid" if self.valid else "invalid"

    def __repr__(self):
        return (f"RouteEntry(dest={self.dest}, via={self.next_hop}, hops={self.hop_count}, "
                f"seq={self.seqno}, {self.state}, until={self.lifetime:.3f})")


class _Seen:
    __slots__ = ("expiry", "hops", "frame", "replied")

    def __init__(self, expiry, hops):
        self.expiry = expiry
        self.hops = hops
        self.frame = None
        self.replied = False


class _Discovery:
    __slots__ = ("attempt", "timer")

    def __init__(self):
        self.attempt = 0
        self.timer = None


class AodvAgent:
    """Routing agent of one node.

    ``net`` supplies ``next_uid()`` for frame ids; ``engine``, ``mac`` and
    ``log`` are the node's simulation context.
    """

    def __init__(self, node, engine, mac, log, net=None):
        self.node = node
        self.engine = engine
        self.mac = mac
        self.log = log
        self.net = net
        mac.upper = self
        self.seqno = 0
        self.rreq_id = 0
        self.routes = {}
        self.seen = {}  # (origin, rreq_id) -> _Seen
        self.buffer = {}
        self.pending = {}
        self.delivered = set()
        self.jittered = set()
        self.originations = 0
        self._uid = 0

    # -- helpers ----------------------------------------------------------
    @property
    def now(self):
        return self.engine.now

    def _next_uid(self):
        if self.net is not None:
            return self.net.next_uid()
        self._uid += 1
        return self.node * 1_000_000_000 + self._uid

    def valid_route(self, dest) -> Optional[RouteEntry]:
        rt = self.routes.get(dest)
        if rt is not None and rt.valid and rt.lifetime >= self.now:
            return rt
        return None

    def _send_control(self, msg, next_hop, jitter=False):
        size = control_size(msg) + MAC_HEADER
        fkind = BCAST if next_hop == BROADCAST else DATA
        frame = Frame(fkind, self.node, next_hop, size, msg, self._next_uid(), priority=True)
        if jitter:
            self.jittered.add(frame)
            delay = BROADCAST_HOLD + self.engine.rng.uniform(0.0, BROADCAST_JITTER)
            self.engine.schedule(self.now + delay, self._hand_down, frame, target=self.node)
        else:
            self._hand_down(frame)
        return frame

    def _hand_down(self, frame):
        self.jittered.discard(frame)
        msg = frame.payload
        self.log.add(self.now, RT_SEND, self.node, type(msg).__name__.upper(), frame.size,
                     frame.dst)
        self.mac.send(frame)

    def _pending(self, frame):
        return frame in self.jittered or self.mac.is_pending(frame)

    def _forward(self, pkt, rt):
        rt.lifetime = max(rt.lifetime, self.now + ACTIVE_ROUTE_TIMEOUT)
        hop = self.routes.get(rt.next_hop)
        if hop is not None and hop.valid:
            hop.lifetime = max(hop.lifetime, self.now + ACTIVE_ROUTE_TIMEOUT)
        self.mac.send(Frame(DATA, self.node, rt.next_hop, pkt.size + IP_HEADER + MAC_HEADER,
                            pkt, self._next_uid()))

    # -- data path --------------------------------------------------------
    def send_data(self, pkt: DataPacket) -> str:
        rt = self.valid_route(pkt.dst)
        if rt is not None:
            self._forward(pkt, rt)
            return "forwarded"
        q = self.buffer.setdefault(pkt.dst, deque())
        if len(q) >= BUFFER_CAPACITY:
            old = q.popleft()
            self.log.add(self.now, APP_DROP, self.node, "buffer-full", old.src, old.uid)
        q.append(pkt)
        if pkt.dst not in self.pending:
            self.initiate_discovery(pkt.dst)
        return "queued_pending_discovery"

    def _deliver(self, pkt):
        if pkt.uid in self.delivered:
            return
        self.delivered.add(pkt.uid)
        self.log.add(self.now, APP_RECV, self.node, pkt.src, pkt.uid, pkt.size, pkt.hops)

    def _flush(self, dest):
        q = self.buffer.pop(dest, None)
        while q:
            self.send_data(q.popleft())

    # -- discovery --------------------------------------------------------
    def initiate_discovery(self, dest):
        if dest in self.pending:
            return
        self.pending[dest] = _Discovery()
        self._send_rreq(dest)

    def _send_rreq(self, dest):
        d = self.pending[dest]
        ttl = TTL_SEQUENCE[d.attempt]
        self.seqno = seq_inc(self.seqno)
        self.rreq_id += 1
        self.originations += 1
        self.seen[(self.node, self.rreq_id)] = _Seen(self.now + PATH_DISCOVERY_TIME, 0)
        rt = self.routes.get(dest)
        dseq = rt.seqno if rt is not None and rt.valid_seqno else None
        self._send_control(Rreq(self.rreq_id, self.node, self.seqno, dest, dseq, 0, ttl),
                           BROADCAST)
        d.timer = self.engine.schedule(self.now + ring_timeout(ttl), self._rreq_timeout,
                                       dest, d, target=self.node)

    def _rreq_timeout(self, dest, d):
        if self.pending.get(dest) is not d:
            return
        if self.valid_route(dest) is not None:
            del self.pending[dest]
            self._flush(dest)
            return
        d.attempt += 1
        if d.attempt < len(TTL_SEQUENCE):
            self._send_rreq(dest)
            return
        del self.pending[dest]
        for pkt in self.buffer.pop(dest, ()):
            self.log.add(self.now, APP_DROP, self.node, "no-route", pkt.src, pkt.uid)

    def _finish_discovery(self, dest):
        d = self.pending.pop(dest, None)
        if d is not None:
            self.engine.cancel(d.timer)
        self._flush(dest)

    # -- route table updates ---------------------------------------------
    def _touch_neighbor(self, nb):
        """Hearing from ``nb`` proves a one-hop route to it."""
        exp = self.now + ACTIVE_ROUTE_TIMEOUT
        rt = self.routes.get(nb)
        if rt is None:
            self.routes[nb] = RouteEntry(nb, nb, 1, 0, False, exp)
            return
        if not rt.valid or rt.hop_count != 1 or rt.next_hop != nb:
            rt.next_hop, rt.hop_count = nb, 1
            rt.valid, rt.invalid_since = True, None
            rt.lifetime = exp
        else:
            rt.lifetime = max(rt.lifetime, exp)

    def _update(self, dest, next_hop, hops, seqno, lifetime):
        """Install a route if it is fresher (or equally fresh and shorter). Returns True if used."""
        rt = self.routes.get(dest)
        if rt is None:
            self.routes[dest] = RouteEntry(dest, next_hop, hops, seqno, True, lifetime)
            return True
        if (not rt.valid_seqno or seq_newer(seqno, rt.seqno)
                or (seqno == rt.seqno and (not rt.valid or hops < rt.hop_count))):
            rt.next_hop, rt.hop_count, rt.seqno = next_hop, hops, seqno
            rt.valid_seqno, rt.valid, rt.invalid_since = True, True, None
            rt.lifetime = lifetime
            return True
        return False

    # -- incoming ---------------------------------------------------------
    def mac_receive(self, frame):
        msg = frame.payload
        prev = frame.src
        if isinstance(msg, DataPacket):
            msg.hops += 1
            self._touch_neighbor(prev)
            if msg.dst == self.node:
                self._deliver(msg)
            else:
                self.send_data(msg)
        elif isinstance(msg, Rreq):
            self.process_rreq(msg, prev)
        elif isinstance(msg, Rrep):
            self.process_rrep(msg, prev)
        elif isinstance(msg, Rerr):
            self.process_rerr(msg, prev)

    def process_rreq(self, msg: Rreq, prev) -> str:
        now = self.now
        if msg.origin == self.node:
            return "dropped"
        key = (msg.origin, msg.rreq_id)
        hops = msg.hop_count + 1
        seen = self.seen.get(key)
        if seen is not None and seen.expiry > now:
            # A copy that came over a strictly shorter path may still correct
            # what the first copy set up, but it never causes a second flood.
            if hops >= seen.hops:
                return "dropped"
            return self._improve(msg, prev, hops, seen)
        seen = _Seen(now + PATH_DISCOVERY_TIME, hops)
        self.seen[key] = seen
        rev = self._reverse(msg, prev, hops)

        if msg.dest == self.node:
            if msg.dest_seqno is not None:
                self.seqno = seq_max(self.seqno, msg.dest_seqno)
            self._send_control(Rrep(msg.origin, self.node, self.seqno, 0, MY_ROUTE_TIMEOUT),
                               prev)
            seen.replied = True
            return "rrep"
        if self._intermediate_reply(msg, prev, rev):
            seen.replied = True
            return "rrep"
        if msg.ttl - 1 > 0:
            seen.frame = self._send_control(msg._replace(hop_count=hops, ttl=msg.ttl - 1),
                                            BROADCAST, jitter=True)
            return "rebroadcast"
        return "expired"

    def _reverse(self, msg, prev, hops):
        now = self.now
        self._touch_neighbor(prev)
        self._update(msg.origin, prev, hops, msg.origin_seqno, now + ACTIVE_ROUTE_TIMEOUT)
        rev = self.routes[msg.origin]
        if rev.valid:
            rev.lifetime = max(rev.lifetime, now + ACTIVE_ROUTE_TIMEOUT)
        return rev

    def _intermediate_reply(self, msg, prev, rev):
        fwd = self.valid_route(msg.dest)
        if (fwd is None or not fwd.valid_seqno
                or (msg.dest_seqno is not None and seq_newer(msg.dest_seqno, fwd.seqno))):
            return False
        fwd.precursors.add(prev)
        rev.precursors.add(fwd.next_hop)
        self._send_control(Rrep(msg.origin, msg.dest, fwd.seqno, fwd.hop_count,
                                fwd.lifetime - self.now), prev)
        return True

    def _improve(self, msg, prev, hops, seen):
        seen.hops = hops
        rev = self._reverse(msg, prev, hops)
        if msg.dest == self.node:
            self._send_control(Rrep(msg.origin, self.node, self.seqno, 0, MY_ROUTE_TIMEOUT),
                               prev)
            return "rrep"
        if seen.replied:
            self._intermediate_reply(msg, prev, rev)
            return "rrep"
        if seen.frame is not None and self._pending(seen.frame):
            # our rebroadcast has not gone out yet: let it carry the better count
            seen.frame.payload = seen.frame.payload._replace(hop_count=hops)
            return "updated"
        return "dropped"

    def process_rrep(self, msg: Rrep, prev) -> str:
        now = self.now
        self._touch_neighbor(prev)
        hops = msg.hop_count + 1
        used = self._update(msg.dest, prev, hops, msg.dest_seqno, now + msg.lifetime)
        if msg.origin == self.node:
            if self.valid_route(msg.dest) is not None:
                self._finish_discovery(msg.dest)
            return "installed" if used else "ignored"
        if not used:
            return "ignored"
        rev = self.valid_route(msg.origin)
        if rev is None:
            self.log.add(now, RT_DROP, self.node, "RREP", "no-reverse-route", msg.origin)
            return "dropped"
        self.routes[msg.dest].precursors.add(rev.next_hop)
        rev.precursors.add(prev)
        rev.lifetime = max(rev.lifetime, now + ACTIVE_ROUTE_TIMEOUT)
        self._send_control(msg._replace(hop_count=hops), rev.next_hop)
        return "forwarded"

    def _invalidate(self, rt, seqno):
        rt.valid = False
        rt.seqno = seqno
        rt.invalid_since = self.now
        rt.lifetime = self.now

    def _send_rerr(self, affected):
        notify = any(rt.precursors for rt in affected)
        for rt in affected:
            rt.precursors.clear()
        if notify:
            self._send_control(Rerr(tuple((rt.dest, rt.seqno) for rt in affected)), BROADCAST,
                               jitter=True)
        return notify

    def handle_link_break(self, broken) -> bool:
        """Invalidate routes through ``broken``; returns True if a RERR went out."""
        affected = []
        for dest in sorted(self.routes):
            rt = self.routes[dest]
            if rt.valid and rt.next_hop == broken:
                self._invalidate(rt, seq_inc(rt.seqno) if rt.valid_seqno else rt.seqno)
                affected.append(rt)
        return self._send_rerr(affected) if affected else False

    def process_rerr(self, msg: Rerr, prev) -> bool:
        affected = []
        for dest, seqno in msg.unreachable:
            rt = self.routes.get(dest)
            if rt is not None and rt.valid and rt.next_hop == prev:
                self._invalidate(rt, seqno if seq_newer(seqno, rt.seqno) else rt.seqno)
                affected.append(rt)
        return self._send_rerr(affected) if affected else False

    def mac_done(self, frame, ok):
        if ok or frame.dst == BROADCAST:
            return
        self.handle_link_break(frame.dst)
        failed = [frame] + self.mac.purge(frame.dst)
        for i, f in enumerate(failed):
            pkt = f.payload
            if not isinstance(pkt, DataPacket):
                continue
            if pkt.src == self.node:
                self.send_data(pkt)  # back to the buffer, rediscover
            elif i > 0:
                self.log.add(self.now, MAC_DROP, self.node, "link-break", f.dst, f.uid, f.size)

    def purge_expired(self, now=None):
        now = self.now if now is None else now
        for dest in sorted(self.routes):
            rt = self.routes[dest]
            if rt.valid and rt.lifetime < now:
                self._invalidate(rt, seq_inc(rt.seqno) if rt.valid_seqno else rt.seqno)
                rt.invalid_since = now
            elif not rt.valid and rt.invalid_since is not None \
                    and now - rt.invalid_since > DELETE_PERIOD:
                del self.routes[dest]
        stale = [k for k, e in self.seen.items() if e.expiry <= now]
        for k in stale:
            del self.seen[k]
