"""Single experiment runs: mobility + traffic + simulation + metrics."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from typing import Optional

from ..errors import InvalidConfigError
from ..mobility import Damage, Downtown, MobilityConfig, TraceSet, Waypoint, generate
from ..netsim import MacParams, PhyConfig, Scenario, Simulation
from ..road_network import build_grid, place_semaphores
from .metrics import MetricsReport, compute_metrics
from .traffic import TrafficConfig, build_traffic

MODEL_NAMES = {"sm": "SM", "mm": "MM", "dm": "DM", "flow": "FLOW"}


def derive_seed(seed: int, label: str) -> int:
    """Independent 63-bit sub-seed per component, stable across platforms."""
    h = hashlib.sha256(f"{seed}:{label}".encode()).digest()
    return int.from_bytes(h[:8], "big") >> 1


def model_name(model: str) -> str:
    key = model.lower()
    if key not in MODEL_NAMES:
        raise InvalidConfigError(f"unknown mobility model {model!r}")
    return MODEL_NAMES[key]


@dataclass(frozen=True)
class ExperimentConfig:
    area_width: float = 500.0
    area_height: float = 500.0
    blocks_x: int = 5
    blocks_y: int = 5
    duration: float = 300.0
    max_speed: float = 40.0
    min_speed: float = 5.0
    # CityMob semaphores (MM/DM); FLOW always uses its own signal plan
    p_intersection: float = 0.5
    p_midstreet: float = 0.1
    semaphore_period: float = 60.0
    downtown: Downtown = field(default_factory=Downtown)
    damage: Optional[Damage] = None
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    phy: PhyConfig = field(default_factory=PhyConfig)
    mac: MacParams = field(default_factory=MacParams)

    def with_(self, **kw):
        return replace(self, **kw)


def build_network(cfg: ExperimentConfig, model: str, seed: int):
    net = build_grid(cfg.blocks_x, cfg.blocks_y, cfg.area_width, cfg.area_height, cfg.max_speed)
    if model in ("MM", "DM") and (cfg.p_intersection > 0 or cfg.p_midstreet > 0):
        net = place_semaphores(net, cfg.p_intersection, cfg.p_midstreet, cfg.semaphore_period,
                               derive_seed(seed, "semaphores"))
    return net


def generate_trace(model: str, n_vehicles: int, seed: int,
                   cfg: ExperimentConfig = ExperimentConfig()) -> TraceSet:
    model = model_name(model)
    net = build_network(cfg, model, seed)
    # mobility needs a positive horizon even when the network run has none
    duration = cfg.duration if cfg.duration > 0 else 1.0
    mcfg = MobilityConfig(model, n_vehicles, duration, net, max_speed=cfg.max_speed,
                          min_speed=cfg.min_speed, seed=derive_seed(seed, "mobility"),
                          downtown=cfg.downtown if model == "DM" else None,
                          damage=cfg.damage if model in ("MM", "DM") else None)
    return generate(mcfg)


def static_trace(points, duration: float, area=None) -> TraceSet:
    """Frozen mobility: each node parked at its point for the whole run."""
    if area is None:
        area = (max(p[0] for p in points), max(p[1] for p in points))
    vehicles = [[Waypoint(0.0, float(x), float(y), 0.0), Waypoint(duration, float(x), float(y),
                                                                   0.0)]
                for x, y in points]
    return TraceSet(float(area[0]), float(area[1]), duration, vehicles, [])


def build_scenario(trace: TraceSet, seed: int, cfg: ExperimentConfig = ExperimentConfig(),
                   connections=None) -> Scenario:
    if connections is None:
        tcfg = replace(cfg.traffic, seed=derive_seed(seed, "traffic"))
        connections = build_traffic(tcfg, trace.n_vehicles)
    return Scenario(trace, connections, cfg.duration, derive_seed(seed, "engine"), cfg.phy,
                    cfg.mac)


def run_scenario(scenario: Scenario):
    """Run and return (MetricsReport, Simulation)."""
    sim = Simulation(scenario)
    log = sim.run()
    return compute_metrics(log, scenario.duration, len(scenario.connections)), sim


def run_experiment(model: str, n_vehicles: int, seed: int,
                   cfg: ExperimentConfig = ExperimentConfig()) -> MetricsReport:
    trace = generate_trace(model, n_vehicles, seed, cfg)
    report, _ = run_scenario(build_scenario(trace, seed, cfg))
    return report
