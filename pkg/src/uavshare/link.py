"""Scalar SINR evaluation of one UAV/GS link against a set of WLAN routers.

This is the reference path: plain ``math`` on one geometry at a time. The
grid evaluator in :mod:`uavshare.coverage` is checked against it.

Beam alignment is perfect: the GS boresight points at the UAV and the UAV
boresight points at the GS. Interference is summed in milliwatts.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

from .antenna import AntennaPattern, gain
from .geometry import Position3D, distance, off_boresight_angle
from .propagation import (
    ZERO_POWER_DBM,
    LinkClass,
    NoiseModel,
    PathLossModel,
    channel_rejection,
    noise_power,
    path_loss,
    received_power,
    sum_dbm,
)


class Role(enum.Enum):
    UAV = "uav"
    GS = "gs"
    ROUTER = "router"


class Condition(enum.IntEnum):
    """Sharing condition, ordered so ties resolve to the lowest value."""
    UPLINK = 0
    DOWNLINK = 1
    TERRESTRIAL = 2


@dataclass(frozen=True)
class RadioNode:
    id: str
    role: Role
    position: Position3D
    tx_power: float  # dBm, conducted
    antenna: AntennaPattern
    uplink: int | None = None
    downlink: int | None = None
    channel: int | None = None

    def __post_init__(self):
        if self.role is Role.ROUTER:
            if self.channel is None:
                raise ValueError(f"router {self.id!r} needs a channel")
            if not self.antenna.is_omni:
                raise ValueError(f"router {self.id!r} must use an omni antenna")
        else:
            if self.uplink is None or self.downlink is None:
                raise ValueError(f"{self.role.value} {self.id!r} needs an uplink/downlink pair")
            if self.uplink == self.downlink:
                raise ValueError(f"{self.role.value} {self.id!r}: uplink and downlink must differ")

    @property
    def eirp(self) -> float:
        return self.tx_power + self.antenna.peak_gain

    def moved(self, position: Position3D) -> "RadioNode":
        return replace(self, position=position)


@dataclass(frozen=True)
class LinkModels:
    """Propagation and receiver constants shared by every link evaluation."""
    path_loss: PathLossModel = field(default_factory=PathLossModel)
    gs_noise: NoiseModel = field(default_factory=NoiseModel)
    uav_noise: NoiseModel = field(default_factory=NoiseModel)
    wlan_noise: NoiseModel = field(default_factory=lambda: NoiseModel(6.0, 20e6))
    ue_distance: float = 5.0  # m, router-to-UE separation
    building_entry_loss: float = 0.0  # dB, on every router path

    def __post_init__(self):
        if not self.ue_distance > 0:
            raise ValueError("ue_distance must be positive")


@dataclass(frozen=True)
class SharingThresholds:
    uplink_min: float = 11.0
    downlink_min: float = 2.0
    terrestrial_min: float = 2.0

    def __post_init__(self):
        for name in ("uplink_min", "downlink_min", "terrestrial_min"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


@dataclass(frozen=True)
class LinkSinr:
    uplink_sinr: float
    downlink_sinr: float
    terrestrial_sinr: tuple[float, ...]

    def margins(self, thresholds: SharingThresholds) -> dict[Condition, float]:
        """Worst margin per condition (minus its threshold); terrestrial takes the minimum."""
        out = {
            Condition.UPLINK: self.uplink_sinr - thresholds.uplink_min,
            Condition.DOWNLINK: self.downlink_sinr - thresholds.downlink_min,
        }
        if self.terrestrial_sinr:
            out[Condition.TERRESTRIAL] = min(self.terrestrial_sinr) - thresholds.terrestrial_min
        return out


@dataclass(frozen=True)
class ConditionResult:
    passed: bool
    worst_margin: float
    binding: Condition


def _link_class(a: RadioNode, b: RadioNode) -> LinkClass:
    return LinkClass.between(a.role is Role.UAV, b.role is Role.UAV)


def _loss(models: LinkModels, a: RadioNode, b: RadioNode) -> float:
    loss = path_loss(models.path_loss, _link_class(a, b), distance(a.position, b.position))
    if Role.ROUTER in (a.role, b.role):
        loss += models.building_entry_loss
    return loss


def _sinr(signal_dbm: float, interference_dbm: list[float], noise: NoiseModel) -> float:
    return signal_dbm - sum_dbm(interference_dbm + [noise_power(noise)])


def uplink_sinr(uav: RadioNode, gs: RadioNode, routers: list[RadioNode],
                models: LinkModels) -> float:
    """SINR at the GS receiver on the UAV's uplink channel."""
    signal = received_power(uav.tx_power, gain(uav.antenna, 0.0), gain(gs.antenna, 0.0),
                            _loss(models, uav, gs))
    interference = []
    for r in routers:
        theta = off_boresight_angle(gs.position, uav.position, r.position)
        interference.append(received_power(
            r.tx_power, r.antenna.peak_gain, gain(gs.antenna, theta),
            _loss(models, r, gs), channel_rejection(uav.uplink, r.channel)))
    return _sinr(signal, interference, models.gs_noise)


def downlink_sinr(uav: RadioNode, gs: RadioNode, routers: list[RadioNode],
                  models: LinkModels) -> float:
    """SINR at the UAV receiver on its downlink channel."""
    signal = received_power(gs.tx_power, gain(gs.antenna, 0.0), gain(uav.antenna, 0.0),
                            _loss(models, gs, uav))
    interference = []
    for r in routers:
        theta = off_boresight_angle(uav.position, gs.position, r.position)
        interference.append(received_power(
            r.tx_power, r.antenna.peak_gain, gain(uav.antenna, theta),
            _loss(models, r, uav), channel_rejection(uav.downlink, r.channel)))
    return _sinr(signal, interference, models.uav_noise)


def terrestrial_sinr(router: RadioNode, uav: RadioNode, gs: RadioNode,
                     models: LinkModels) -> float:
    """SINR of the WLAN link at `router`, with its UE `ue_distance` away.

    The UAV interferes on its uplink channel, the GS on the downlink channel.
    """
    ue_loss = path_loss(models.path_loss, LinkClass.GROUND_TO_GROUND, models.ue_distance)
    signal = received_power(router.tx_power, router.antenna.peak_gain, 0.0, ue_loss)
    rx_gain = router.antenna.peak_gain
    from_uav = received_power(
        uav.tx_power, gain(uav.antenna, off_boresight_angle(uav.position, gs.position, router.position)),
        rx_gain, _loss(models, uav, router), channel_rejection(router.channel, uav.uplink))
    from_gs = received_power(
        gs.tx_power, gain(gs.antenna, off_boresight_angle(gs.position, uav.position, router.position)),
        rx_gain, _loss(models, gs, router), channel_rejection(router.channel, uav.downlink))
    return _sinr(signal, [from_uav, from_gs], models.wlan_noise)


def compute_link_sinr(uav: RadioNode, gs: RadioNode, routers: list[RadioNode],
                      models: LinkModels) -> LinkSinr:
    return LinkSinr(
        uplink_sinr(uav, gs, routers, models),
        downlink_sinr(uav, gs, routers, models),
        tuple(terrestrial_sinr(r, uav, gs, models) for r in routers),
    )


def evaluate_conditions(sinr: LinkSinr, thresholds: SharingThresholds) -> ConditionResult:
    """All conditions must hold with strict inequality."""
    passed = (sinr.uplink_sinr > thresholds.uplink_min
              and sinr.downlink_sinr > thresholds.downlink_min
              and all(t > thresholds.terrestrial_min for t in sinr.terrestrial_sinr))
    margins = sinr.margins(thresholds)
    binding = min(margins, key=lambda c: (margins[c], c))
    return ConditionResult(passed, margins[binding], binding)


__all__ = [
    "Condition", "ConditionResult", "LinkModels", "LinkSinr", "RadioNode", "Role",
    "SharingThresholds", "ZERO_POWER_DBM", "compute_link_sinr", "downlink_sinr",
    "evaluate_conditions", "terrestrial_sinr", "uplink_sinr",
]
