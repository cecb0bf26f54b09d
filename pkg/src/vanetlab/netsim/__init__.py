"""Discrete-event wireless network core: engine, PHY, channel, MAC, scenario runner."""
from .channel import BELOW_THRESHOLD, BROADCAST, COLLIDED, RECEIVED, Channel, NodePositions
from .engine import (APP_DROP, APP_RECV, APP_SEND, LOG_KINDS, MAC_DROP, RT_DROP, RT_SEND,
                     Engine, EventLog, SimEvent)
from .mac import ACK, ACK_SIZE, BCAST, DATA, MAC_HEADER, Frame, Mac, MacParams
from .phy import PhyConfig, PowerModel, crossover_distance, rx_power
from .runner import Scenario, Simulation, run

__all__ = [
    "BELOW_THRESHOLD", "BROADCAST", "COLLIDED", "RECEIVED", "Channel", "NodePositions",
    "APP_DROP", "APP_RECV", "APP_SEND", "LOG_KINDS", "MAC_DROP", "RT_DROP", "RT_SEND",
    "Engine", "EventLog", "SimEvent",
    "ACK", "ACK_SIZE", "BCAST", "DATA", "MAC_HEADER", "Frame", "Mac", "MacParams",
    "PhyConfig", "PowerModel", "crossover_distance", "rx_power",
    "Scenario", "Simulation", "run",
]
