"""Throughput, delay and overhead from an event log."""
from __future__ import annotations

from dataclasses import dataclass, fields
from typing import NamedTuple, Optional

from ..netsim.engine import APP_DROP, APP_RECV, APP_SEND, MAC_DROP, RT_SEND


class Delivery(NamedTuple):
    uid: int
    src: int
    dst: int
    sent: float
    received: float
    hops: int
    size: int

    @property
    def delay(self):
        return self.received - self.sent


@dataclass(frozen=True)
class MetricsReport:
    throughput: float  # bits/s of application payload
    mean_delay: Optional[float]  # None when nothing was delivered
    overhead: int  # routing-packet transmissions, counted per hop
    delivery_ratio: Optional[float]
    sent: int
    received: int
    rreq: int
    rrep: int
    rerr: int
    mac_drops: int
    app_drops: int
    overhead_bytes: int
    n_connections: int = 0

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


METRIC_NAMES = ("throughput", "mean_delay", "overhead", "delivery_ratio")


def deliveries(log) -> list:
    sends = {}
    out = []
    for r in log:
        kind = r[1]
        if kind == APP_SEND:
            # time APP_SEND src dst uid size
            sends[r[4]] = (r[0], r[2], r[3])
        elif kind == APP_RECV:
            # time APP_RECV dst src uid size hops
            t0, src, dst = sends[r[4]]
            out.append(Delivery(r[4], src, dst, t0, r[0], r[6], r[5]))
    return out


def compute_metrics(log, duration: float, n_connections: int = 0) -> MetricsReport:
    sent = 0
    counts = {"RREQ": 0, "RREP": 0, "RERR": 0}
    rt_bytes = 0
    mac_drops = app_drops = 0
    for r in log:
        kind = r[1]
        if kind == APP_SEND:
            sent += 1
        elif kind == RT_SEND:
            counts[r[3]] += 1
            rt_bytes += r[4]
        elif kind == MAC_DROP:
            mac_drops += 1
        elif kind == APP_DROP:
            app_drops += 1
    dl = deliveries(log)
    received = len(dl)
    payload = sum(d.size for d in dl)
    throughput = 8.0 * payload / duration if duration > 0 else 0.0
    mean_delay = sum(d.delay for d in dl) / received if received else None
    ratio = received / sent if sent else None
    return MetricsReport(throughput, mean_delay, sum(counts.values()), ratio, sent, received,
                         counts["RREQ"], counts["RREP"], counts["RERR"], mac_drops, app_drops,
                         rt_bytes, n_connections)
