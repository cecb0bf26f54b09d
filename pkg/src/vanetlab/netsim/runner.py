"""Scenario assembly: one MAC + AODV stack per node, CBR sources, periodic purge."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from ..errors import InvalidConfigError
from .channel import Channel, NodePositions
from .engine import APP_SEND, Engine, EventLog
from .mac import Mac, MacParams
from .phy import PhyConfig

PURGE_INTERVAL = 1.0


@dataclass
class Scenario:
    """Everything one run needs.

    ``connections`` items need ``src``, ``dst``, ``start``, ``interval``,
    ``packet_size`` and ``max_packets`` attributes (see harness.traffic).
    """
    trace: object
    connections: Sequence = ()
    duration: float = 300.0
    seed: int = 0
    phy: PhyConfig = field(default_factory=PhyConfig)
    mac: MacParams = field(default_factory=MacParams)


class Simulation:
    def __init__(self, scenario: Scenario):
        from ..aodv import AodvAgent  # routing sits above the core

        if scenario.duration < 0:
            raise InvalidConfigError("duration must be non-negative")
        self.scenario = scenario
        self.engine = Engine(scenario.duration, scenario.seed)
        self.log = EventLog()
        n = len(scenario.trace.vehicles)
        self.positions = NodePositions(scenario.trace.vehicles)
        self.channel = Channel(self.positions, scenario.phy, self.engine)
        self.macs = [Mac(i, self.engine, self.channel, self.log, scenario.mac) for i in range(n)]
        self.agents = [AodvAgent(i, self.engine, self.macs[i], self.log, self)
                       for i in range(n)]
        self._uid = 0
        self._pkt = 0
        for c in scenario.connections:
            if not (0 <= c.src < n and 0 <= c.dst < n) or c.src == c.dst:
                raise InvalidConfigError(f"bad connection {c.src}->{c.dst}")
            if c.start < scenario.duration and c.max_packets > 0:
                self.engine.schedule(c.start, self._cbr, c, 0)
        if n:
            self.engine.schedule(PURGE_INTERVAL, self._purge)

    def next_uid(self):
        self._uid += 1
        return self._uid

    def send_packet(self, src, dst, size=512):
        """Originate one application packet at ``src`` now."""
        from ..aodv import DataPacket

        self._pkt += 1
        pkt = DataPacket(self._pkt, src, dst, size, self.engine.now)
        self.log.add(self.engine.now, APP_SEND, src, dst, pkt.uid, size)
        self.agents[src].send_data(pkt)
        return pkt

    def _cbr(self, c, k):
        self.send_packet(c.src, c.dst, c.packet_size)
        # absolute times avoid drift from repeated addition
        t = c.start + (k + 1) * c.interval
        if k + 1 < c.max_packets and t < self.scenario.duration:
            self.engine.schedule(t, self._cbr, c, k + 1)

    def _purge(self):
        now = self.engine.now
        for a in self.agents:
            a.purge_expired(now)
        self.engine.schedule(now + PURGE_INTERVAL, self._purge)

    def at(self, t, fn, *args):
        """Schedule an arbitrary callback (used by hand-built scenarios)."""
        return self.engine.schedule(t, fn, *args)

    def run(self, until=None):
        self.engine.run(until)
        return self.log


def run(scenario: Scenario) -> EventLog:
    return Simulation(scenario).run()
