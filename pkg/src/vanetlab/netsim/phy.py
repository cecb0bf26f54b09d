"""Two-ray ground propagation with a free-space region below the crossover distance."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidConfigError


@dataclass(frozen=True)
class PhyConfig:
    # 914 MHz WaveLAN-style radio; gives a 250 m reception / 550 m sensing range
    tx_power: float = 0.28183815
    antenna_gain_tx: float = 1.0
    antenna_gain_rx: float = 1.0
    antenna_height_tx: float = 1.5
    antenna_height_rx: float = 1.5
    wavelength: float = 3e8 / 914e6
    system_loss: float = 1.0
    rx_threshold: float = 3.652e-10
    cs_threshold: float = 1.559e-11
    bitrate: float = 2e6
    preamble: float = 192e-6

    def __post_init__(self):
        vals = (self.tx_power, self.antenna_gain_tx, self.antenna_gain_rx,
                self.antenna_height_tx, self.antenna_height_rx, self.wavelength,
                self.rx_threshold, self.cs_threshold, self.bitrate)
        if min(vals) <= 0 or self.preamble < 0:
            raise InvalidConfigError("PHY parameters must be positive")
        if self.system_loss < 1:
            raise InvalidConfigError("system_loss must be >= 1")
        if self.cs_threshold > self.rx_threshold:
            raise InvalidConfigError("cs_threshold must not exceed rx_threshold")

    def airtime(self, size_bytes):
        return self.preamble + 8.0 * size_bytes / self.bitrate


def crossover_distance(phy: PhyConfig) -> float:
    return 4.0 * math.pi * phy.antenna_height_tx * phy.antenna_height_rx / phy.wavelength


def rx_power(phy: PhyConfig, d: float) -> float:
    if d <= 0:
        raise InvalidConfigError("distance must be positive")
    num = phy.tx_power * phy.antenna_gain_tx * phy.antenna_gain_rx
    if d < crossover_distance(phy):
        return num * phy.wavelength ** 2 / ((4.0 * math.pi * d) ** 2 * phy.system_loss)
    return (num * phy.antenna_height_tx ** 2 * phy.antenna_height_rx ** 2
            / (d ** 4 * phy.system_loss))


class PowerModel:
    """Vectorized :func:`rx_power` over an array of distances (inf -> 0 W)."""

    def __init__(self, phy: PhyConfig):
        num = phy.tx_power * phy.antenna_gain_tx * phy.antenna_gain_rx
        self.dc = crossover_distance(phy)
        self.fs = num * phy.wavelength ** 2 / ((4.0 * math.pi) ** 2 * phy.system_loss)
        self.tr = num * phy.antenna_height_tx ** 2 * phy.antenna_height_rx ** 2 / phy.system_loss

    def __call__(self, d):
        d2 = d * d
        with np.errstate(divide="ignore"):
            return np.where(d < self.dc, self.fs / d2, self.tr / (d2 * d2))
