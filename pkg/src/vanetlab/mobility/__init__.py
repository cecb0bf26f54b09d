"""Synthetic vehicular mobility models."""
from .base import (MODELS, DamageEvent, Damage, Downtown, MobilityConfig, TraceSet, Track,
                   Waypoint, position_at)
from .flow import FlowSim, generate_flow, run_flow
from .manhattan import generate_downtown, generate_manhattan
from .simple import generate_simple, simple_track

_GENERATORS = {
    "SM": generate_simple,
    "MM": generate_manhattan,
    "DM": generate_downtown,
    "FLOW": generate_flow,
}


def generate(cfg: MobilityConfig) -> TraceSet:
    """Dispatch to the generator named by ``cfg.model``."""
    cfg.validate()
    return _GENERATORS[cfg.model](cfg)


__all__ = [
    "MODELS", "DamageEvent", "Damage", "Downtown", "MobilityConfig", "TraceSet", "Track",
    "Waypoint", "position_at", "FlowSim", "generate", "generate_flow", "generate_downtown",
    "generate_manhattan", "generate_simple", "run_flow", "simple_track",
]
