"""Constant-bit-rate traffic schedules."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Optional

from ..errors import InvalidConfigError


@dataclass(frozen=True)
class TrafficConfig:
    n_connections: Optional[int] = None  # None -> max(1, ceil(n_vehicles / 5))
    packet_size: int = 512
    interval: float = 0.25
    max_packets: int = 1000
    start_window: float = 10.0
    seed: int = 0

    def connections_for(self, n_vehicles: int) -> int:
        if self.n_connections is not None:
            return self.n_connections
        return max(1, math.ceil(n_vehicles / 5))


@dataclass(frozen=True)
class Connection:
    src: int
    dst: int
    start: float
    interval: float
    packet_size: int
    max_packets: int

    def emission_times(self, duration: float) -> list:
        """Send times that fall strictly inside the horizon."""
        out = []
        for k in range(self.max_packets):
            t = self.start + k * self.interval
            if t >= duration:
                break
            out.append(t)
        return out


def build_traffic(cfg: TrafficConfig, n_vehicles: int) -> list:
    """Draw distinct ordered (source, destination) pairs and staggered start times."""
    if n_vehicles < 2:
        raise InvalidConfigError("traffic needs at least two vehicles")
    if cfg.packet_size <= 0 or cfg.interval <= 0 or cfg.max_packets < 0 or cfg.start_window < 0:
        raise InvalidConfigError("invalid traffic parameters")
    k = cfg.connections_for(n_vehicles)
    n_pairs = n_vehicles * (n_vehicles - 1)
    if k < 1 or k > n_pairs:
        raise InvalidConfigError(f"{k} connections requested but only {n_pairs} ordered pairs")
    rng = random.Random(cfg.seed)
    out = []
    for idx in rng.sample(range(n_pairs), k):
        src, r = divmod(idx, n_vehicles - 1)
        dst = r + 1 if r >= src else r
        start = round(rng.uniform(0.0, cfg.start_window), 6)
        out.append(Connection(src, dst, start, cfg.interval, cfg.packet_size, cfg.max_packets))
    return out
