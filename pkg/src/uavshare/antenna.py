"""Rotationally symmetric antenna gain patterns.

Directional antennas use a parabolic main lobe, 12 (theta / beamwidth)^2 dB
of attenuation, floored at a constant side-lobe level. The attenuation is
exactly 3 dB at half the 3 dB beamwidth.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class AntennaKind(enum.Enum):
    DIRECTIONAL = "directional"
    OMNI = "omni"


@dataclass(frozen=True)
class AntennaPattern:
    kind: AntennaKind
    peak_gain: float  # dBi
    beamwidth_3db: float | None = None  # degrees, full width
    sidelobe_floor: float | None = None  # dB below peak

    def __post_init__(self):
        if self.kind is AntennaKind.DIRECTIONAL:
            if self.beamwidth_3db is None or not 0.0 < self.beamwidth_3db <= 180.0:
                raise ValueError(f"beamwidth_3db must be in (0, 180], got {self.beamwidth_3db}")
            if self.sidelobe_floor is None or not self.sidelobe_floor > 0.0:
                raise ValueError(f"sidelobe_floor must be > 0, got {self.sidelobe_floor}")
        elif self.beamwidth_3db is not None or self.sidelobe_floor is not None:
            raise ValueError("omni patterns take no beamwidth or side-lobe floor")

    @classmethod
    def directional(cls, peak_gain: float, beamwidth_3db: float,
                    sidelobe_floor: float = 25.0) -> "AntennaPattern":
        return cls(AntennaKind.DIRECTIONAL, peak_gain, beamwidth_3db, sidelobe_floor)

    @classmethod
    def omni(cls, peak_gain: float = 0.0) -> "AntennaPattern":
        return cls(AntennaKind.OMNI, peak_gain)

    @property
    def is_omni(self) -> bool:
        return self.kind is AntennaKind.OMNI

    @property
    def min_gain(self) -> float:
        return self.peak_gain if self.is_omni else self.peak_gain - self.sidelobe_floor


def gain(pattern: AntennaPattern, theta: float) -> float:
    """Gain in dBi at `theta` degrees off boresight."""
    if not 0.0 <= theta <= 180.0:
        raise ValueError(f"theta must be in [0, 180] degrees, got {theta}")
    if pattern.is_omni:
        return pattern.peak_gain
    attenuation = 12.0 * (theta / pattern.beamwidth_3db) ** 2
    return pattern.peak_gain - min(attenuation, pattern.sidelobe_floor)


def gain_array(pattern: AntennaPattern, theta: np.ndarray) -> np.ndarray:
    """Vectorized `gain`; angles are assumed to lie in [0, 180]."""
    theta = np.asarray(theta, dtype=float)
    if pattern.is_omni:
        return np.full(theta.shape, pattern.peak_gain)
    attenuation = 12.0 * (theta / pattern.beamwidth_3db) ** 2
    return pattern.peak_gain - np.minimum(attenuation, pattern.sidelobe_floor)


def eirp(pattern: AntennaPattern, tx_power: float) -> float:
    return tx_power + pattern.peak_gain
