"""Log-distance path loss, thermal noise and adjacent-channel rejection.

Powers are in dBm, gains and losses in dB. A fully rejected interferer
is represented by an infinite rejection (``TOTAL_REJECTION``), which maps
to a received power of ``-inf`` dBm, i.e. exactly zero milliwatts.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0
THERMAL_DENSITY_DBM_HZ = -174.0
TOTAL_REJECTION = math.inf
ZERO_POWER_DBM = -math.inf

# IEEE 802.11ac spectrum-mask rejection by channel offset; larger offsets
# are treated as fully rejected.
ADJACENT_REJECTION_DB = (0.0, 16.0, 32.0)


class CloseRangeWarning(UserWarning):
    """A distance below the model's reference distance was clamped."""


class LinkClass(enum.Enum):
    AIR_TO_GROUND = "air_to_ground"
    GROUND_TO_GROUND = "ground_to_ground"

    @classmethod
    def between(cls, a_is_uav: bool, b_is_uav: bool) -> "LinkClass":
        return cls.AIR_TO_GROUND if (a_is_uav or b_is_uav) else cls.GROUND_TO_GROUND


def free_space_loss(distance_m: float, frequency_mhz: float) -> float:
    """Free-space path loss in dB: 20 log10(4 pi d f / c)."""
    if distance_m <= 0 or frequency_mhz <= 0:
        raise ValueError("distance and frequency must be positive")
    return 20.0 * math.log10(4.0 * math.pi * distance_m * frequency_mhz * 1e6 / SPEED_OF_LIGHT)


@dataclass(frozen=True)
class PathLossModel:
    carrier_frequency: float = 5700.0  # MHz
    reference_distance: float = 1.0  # m
    reference_loss: float | None = None  # dB, free-space at reference_distance if omitted
    exponent_air: float = 2.0
    exponent_ground: float = 4.0

    def __post_init__(self):
        if self.exponent_air <= 0 or self.exponent_ground <= 0:
            raise ValueError("path-loss exponents must be positive")
        if self.reference_distance <= 0:
            raise ValueError("reference_distance must be positive")
        fs = free_space_loss(self.reference_distance, self.carrier_frequency)
        if self.reference_loss is None:
            object.__setattr__(self, "reference_loss", fs)
        elif abs(self.reference_loss - fs) > 0.01:
            raise ValueError(
                f"reference_loss {self.reference_loss} dB differs from free-space "
                f"loss {fs:.3f} dB at {self.reference_distance} m")

    def exponent(self, link_class: LinkClass) -> float:
        if link_class is LinkClass.AIR_TO_GROUND:
            return self.exponent_air
        return self.exponent_ground


def path_loss(model: PathLossModel, link_class: LinkClass, d: float) -> float:
    """Log-distance path loss in dB.

    Distances inside the reference distance are clamped to it and a
    `CloseRangeWarning` is emitted.
    """
    if not d > 0:
        raise ValueError(f"distance must be positive, got {d}")
    if d < model.reference_distance:
        warnings.warn(f"distance {d} m clamped to {model.reference_distance} m",
                      CloseRangeWarning, stacklevel=2)
        d = model.reference_distance
    n = model.exponent(link_class)
    return model.reference_loss + 10.0 * n * math.log10(d / model.reference_distance)


def path_loss_array(model: PathLossModel, link_class: LinkClass,
                    d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized `path_loss`; returns ``(loss_db, clamped_mask)`` instead of warning."""
    d = np.asarray(d, dtype=float)
    clamped = d < model.reference_distance
    dd = np.where(clamped, model.reference_distance, d)
    n = model.exponent(link_class)
    return model.reference_loss + 10.0 * n * np.log10(dd / model.reference_distance), clamped


@dataclass(frozen=True)
class NoiseModel:
    noise_figure: float = 6.0  # dB
    bandwidth: float = 10e6  # Hz
    thermal_density: float = field(default=THERMAL_DENSITY_DBM_HZ, init=False)

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if self.noise_figure < 0:
            raise ValueError("noise_figure must be >= 0")


def noise_power(noise: NoiseModel) -> float:
    return noise.thermal_density + 10.0 * math.log10(noise.bandwidth) + noise.noise_figure


@dataclass(frozen=True)
class ChannelRaster:
    """10 MHz channel raster shared by the UAV link and, partly, by WLAN.

    Channel ``i`` is centred on ``low_mhz + spacing/2 + spacing*i``.
    """
    low_mhz: float = 5650.0
    spacing_mhz: float = 10.0
    count: int = 10
    wlan_low_mhz: float = 5650.0
    wlan_high_mhz: float = 5730.0

    def __post_init__(self):
        if self.count < 1 or self.spacing_mhz <= 0:
            raise ValueError("raster needs at least one channel and positive spacing")

    @property
    def high_mhz(self) -> float:
        return self.low_mhz + self.spacing_mhz * self.count

    def __contains__(self, index) -> bool:
        return isinstance(index, (int, np.integer)) and 0 <= index < self.count

    def __iter__(self):
        return iter(range(self.count))

    def center_mhz(self, index: int) -> float:
        self.check(index)
        return self.low_mhz + self.spacing_mhz * (index + 0.5)

    def wlan_overlap(self, index: int) -> bool:
        c = self.center_mhz(index)
        half = self.spacing_mhz / 2
        return self.wlan_low_mhz <= c - half and c + half <= self.wlan_high_mhz

    def check(self, index: int) -> int:
        if index not in self:
            raise ValueError(f"channel {index!r} is not on the raster [0, {self.count - 1}]")
        return int(index)


def channel_rejection(victim: int, interferer: int) -> float:
    """Rejection in dB of `interferer` as seen by a receiver tuned to `victim`."""
    offset = abs(int(victim) - int(interferer))
    if offset < len(ADJACENT_REJECTION_DB):
        return ADJACENT_REJECTION_DB[offset]
    return TOTAL_REJECTION


def received_power(tx_power: float, tx_gain: float, rx_gain: float, loss: float,
                   rejection: float = 0.0) -> float:
    if rejection == TOTAL_REJECTION:
        return ZERO_POWER_DBM
    return tx_power + tx_gain + rx_gain - loss - rejection


_DB_TO_NEPER = math.log(10.0) / 10.0


def dbm_to_mw(p_dbm):
    return np.exp(np.asarray(p_dbm, dtype=float) * _DB_TO_NEPER)


def mw_to_dbm(p_mw):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(p_mw)


def sum_dbm(powers_dbm: Iterable[float]) -> float:
    """Linear (milliwatt) power sum of dBm terms, returned in dBm."""
    total = math.fsum(10.0 ** (p / 10.0) for p in powers_dbm if p != ZERO_POWER_DBM)
    return 10.0 * math.log10(total) if total > 0 else ZERO_POWER_DBM
