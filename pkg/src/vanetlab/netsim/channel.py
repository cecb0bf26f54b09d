"""Shared wireless medium: positions, carrier sense, reception and collisions."""
from __future__ import annotations

import math

import numpy as np

from .phy import PhyConfig, PowerModel

BROADCAST = -1

RECEIVED = "received"
BELOW_THRESHOLD = "below_threshold"
COLLIDED = "collided"


class NodePositions:
    """Piecewise-linear node positions, advanced with per-node leg cursors.

    Queries are expected in non-decreasing time order (as the engine
    produces them); an earlier query rewinds the cursors.
    """

    def __init__(self, vehicles):
        self.tracks = [(np.array([w.t for w in wps]), wps) for wps in vehicles]
        n = len(vehicles)
        self.n = n
        self.idx = np.zeros(n, dtype=np.int64)
        self.t0 = np.zeros(n)
        self.base = np.zeros((n, 2))
        self.vel = np.zeros((n, 2))
        self.t_next = np.zeros(n)
        self._t = None
        self._pos = None
        for i in range(n):
            self._seek(i, 0.0, 0)

    def _seek(self, i, t, start):
        times, wps = self.tracks[i]
        k = max(start, int(np.searchsorted(times, t, side="right")) - 1)
        k = max(k, 0)
        self.idx[i] = k
        w = wps[k]
        self.t0[i] = w.t
        self.base[i] = (w.x, w.y)
        if k + 1 < len(wps) and w.speed > 0:
            nxt = wps[k + 1]
            span = nxt.t - w.t
            self.vel[i] = ((nxt.x - w.x) / span, (nxt.y - w.y) / span)
        else:
            self.vel[i] = (0.0, 0.0)
        self.t_next[i] = wps[k + 1].t if k + 1 < len(wps) else math.inf

    def at(self, t):
        if t == self._t:
            return self._pos
        if self._t is not None and t < self._t:
            for i in range(self.n):
                self._seek(i, t, 0)
        else:
            for i in np.nonzero(self.t_next <= t)[0]:
                self._seek(int(i), t, int(self.idx[i]))
        self._t = t
        self._pos = self.base + self.vel * (t - self.t0)[:, None]
        return self._pos


class Transmission:
    """One frame on the air.

    ``power[j]`` is the received power at node ``j``; ``rx_nodes`` are the
    intended receivers above the reception threshold and ``rx_ok`` whether
    each one is still decoding the frame cleanly.
    """

    __slots__ = ("id", "sender", "frame", "start", "end", "power", "rx_nodes", "rx_ok",
                 "_rx_th")

    def __init__(self, tid, sender, frame, start, end, power, rx_th):
        self.id = tid
        self.sender = sender
        self.frame = frame
        self.start = start
        self.end = end
        self.power = power
        self.rx_nodes = None
        self.rx_ok = None
        self._rx_th = rx_th

    def outcome(self, node):
        hit = np.nonzero(self.rx_nodes == node)[0]
        if len(hit):
            return RECEIVED if self.rx_ok[hit[0]] else COLLIDED
        if node == self.sender or self.power[node] < self._rx_th:
            return BELOW_THRESHOLD
        # in range but not an intended receiver
        return RECEIVED

    def received_by(self):
        return [int(j) for j in self.rx_nodes[self.rx_ok]]


class Channel:
    """Single shared channel.

    A transmission starting at ``t`` is sensed by every node whose received
    power is at least the carrier-sense threshold, and decoded by intended
    receivers above the reception threshold. A frame arriving while a node
    already senses a signal (or is transmitting) is lost there; an ongoing
    reception survives the newcomer only if it is strictly stronger and
    started earlier. Nodes are half duplex.
    """

    def __init__(self, positions: NodePositions, phy: PhyConfig, engine):
        self.positions = positions
        self.phy = phy
        self.engine = engine
        self.power_model = PowerModel(phy)
        n = positions.n
        self.n = n
        self.sig_end = np.zeros(n)  # end of the latest sensed signal per node
        self.tx_end = np.zeros(n)
        # reception in progress per node: power, start, transmission, slot in its rx_nodes
        self.cur_pow = np.full(n, -1.0)
        self.cur_start = np.zeros(n)
        self.cur_id = np.full(n, -1, dtype=np.int64)
        self.cur_slot = np.zeros(n, dtype=np.int64)
        self.active = {}
        self.macs = [None] * n
        self.contending = set()
        self.transmissions = 0

    def attach(self, node, mac):
        self.macs[node] = mac

    def airtime(self, size):
        return self.phy.airtime(size)

    def idle_since(self, node, now):
        """True when ``node`` senses an idle medium at ``now``."""
        return self.sig_end[node] <= now and self.tx_end[node] <= now

    def _kill(self, nodes):
        for j in nodes:
            tx = self.active.get(int(self.cur_id[j]))
            if tx is not None:
                tx.rx_ok[self.cur_slot[j]] = False
        self.cur_id[nodes] = -1
        self.cur_pow[nodes] = -1.0

    def transmit(self, sender, frame, now=None):
        now = self.engine.now if now is None else now
        end = now + self.phy.airtime(frame.size)
        pos = self.positions.at(now)
        d = np.hypot(pos[:, 0] - pos[sender, 0], pos[:, 1] - pos[sender, 1])
        d[sender] = math.inf
        power = self.power_model(d)
        self.transmissions += 1
        tx = Transmission(self.transmissions, sender, frame, now, end, power,
                          self.phy.rx_threshold)

        # half duplex: whatever the sender was receiving is lost
        if self.cur_id[sender] >= 0:
            self._kill([sender])
        if end > self.tx_end[sender]:
            self.tx_end[sender] = end

        sensed = power >= self.phy.cs_threshold
        busy = sensed & ((self.sig_end > now) | (self.tx_end > now))
        # ongoing receptions lose unless strictly stronger and earlier
        losers = np.nonzero(sensed & (self.cur_id >= 0)
                            & ((self.cur_pow <= power) | (self.cur_start == now)))[0]
        if len(losers):
            self._kill(losers)
        np.maximum(self.sig_end, np.where(sensed, end, 0.0), out=self.sig_end)

        dst = frame.dst
        if dst == BROADCAST:
            rx_nodes = np.nonzero(power >= self.phy.rx_threshold)[0]
        elif 0 <= dst < self.n and power[dst] >= self.phy.rx_threshold:
            rx_nodes = np.array([dst], dtype=np.int64)
        else:
            rx_nodes = np.zeros(0, dtype=np.int64)
        rx_ok = ~busy[rx_nodes]
        tx.rx_nodes = rx_nodes
        tx.rx_ok = rx_ok
        clean = rx_nodes[rx_ok]
        if len(clean):
            self.cur_pow[clean] = power[clean]
            self.cur_start[clean] = now
            self.cur_id[clean] = tx.id
            self.cur_slot[clean] = np.nonzero(rx_ok)[0]
            self.active[tx.id] = tx

        if self.contending:
            for c in sorted(self.contending):
                if sensed[c]:
                    self.macs[c].medium_busy(now)
        self.engine.schedule(end, self._finish, tx)
        return tx

    def _finish(self, tx):
        if self.active.pop(tx.id, None) is not None:
            mine = tx.rx_nodes[self.cur_id[tx.rx_nodes] == tx.id]
            self.cur_id[mine] = -1
            self.cur_pow[mine] = -1.0
        frame = tx.frame
        for j in tx.rx_nodes[tx.rx_ok].tolist():
            self.macs[j].receive(frame, tx)
        mac = self.macs[tx.sender]
        if mac is not None:
            mac.tx_finished(tx)
