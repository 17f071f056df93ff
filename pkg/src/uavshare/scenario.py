"""Scenario model, JSON loading/dumping and validation.

Documents follow ``data/scenario.schema.json`` (``schema_version`` 1).
Structural problems are reported by JSON Schema; physical problems (EIRP
cap, off-raster channels, bad bounds) are reported afterwards, each with
the path of the offending field.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema

from .antenna import AntennaPattern
from .geometry import AreaBounds, GeometryError, Position3D
from .link import LinkModels, RadioNode, Role, SharingThresholds
from .propagation import ChannelRaster, NoiseModel, PathLossModel

SCHEMA_VERSION = 1
DEFAULT_GS_HEIGHT = 2.0
DEFAULT_ROUTER_HEIGHT = 1.5


class ScenarioError(ValueError):
    """Invalid scenario document; `path` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


class Mode(enum.Enum):
    PROPOSED = "proposed"
    CONVENTIONAL = "conventional"


@dataclass(frozen=True)
class Scenario:
    bounds: AreaBounds
    gs: RadioNode
    uavs: tuple[RadioNode, ...]
    routers: tuple[RadioNode, ...] = ()
    models: LinkModels = field(default_factory=LinkModels)
    thresholds: SharingThresholds = field(default_factory=SharingThresholds)
    raster: ChannelRaster = field(default_factory=ChannelRaster)
    eirp_limit: float = 36.0
    mode: Mode = Mode.PROPOSED

    def __post_init__(self):
        object.__setattr__(self, "uavs", tuple(self.uavs))
        object.__setattr__(self, "routers", tuple(self.routers))
        validate(self)

    @property
    def altitude(self) -> float:
        return self.uavs[0].position.z

    def with_mode(self, mode: Mode | str) -> "Scenario":
        return replace(self, mode=Mode(mode))

    def with_routers(self, routers) -> "Scenario":
        return replace(self, routers=tuple(routers))

    def with_gs_position(self, position: Position3D) -> "Scenario":
        return replace(self, gs=self.gs.moved(position))

    def with_thresholds(self, thresholds: SharingThresholds) -> "Scenario":
        return replace(self, thresholds=thresholds)

    def link_nodes(self, uav_index: int = 0, uplink: int | None = None,
                   downlink: int | None = None) -> tuple[RadioNode, RadioNode]:
        """Effective (uav, gs) nodes for evaluation, after the mode is applied.

        The GS serves the UAV on the UAV's channel pair. In conventional mode
        both ends switch to a 0 dBi omni antenna transmitting at the EIRP cap.
        """
        uav = self.uavs[uav_index]
        pair = dict(uplink=uav.uplink if uplink is None else uplink,
                    downlink=uav.downlink if downlink is None else downlink)
        uav = replace(uav, **pair)
        gs = replace(self.gs, **pair)
        if self.mode is Mode.CONVENTIONAL:
            omni = AntennaPattern.omni(0.0)
            uav = replace(uav, antenna=omni, tx_power=self.eirp_limit)
            gs = replace(gs, antenna=omni, tx_power=self.eirp_limit)
        return uav, gs


def validate(s: Scenario) -> None:
    if not s.uavs:
        raise ScenarioError("uavs", "at least one UAV is required")
    gs = s.gs.position
    if not s.bounds.contains_xy(gs.x, gs.y):
        raise ScenarioError("ground_station.position", f"({gs.x}, {gs.y}) lies outside the area")
    nodes = [("ground_station", s.gs)]
    nodes += [(f"uavs[{i}]", u) for i, u in enumerate(s.uavs)]
    nodes += [(f"routers[{i}]", r) for i, r in enumerate(s.routers)]
    for path, node in nodes:
        if node.eirp > s.eirp_limit + 1e-9:
            raise ScenarioError(
                f"{path}.tx_power_dbm",
                f"EIRP {node.eirp:g} dBm exceeds the {s.eirp_limit:g} dBm limit")
        if node.role is Role.ROUTER:
            if node.channel not in s.raster:
                raise ScenarioError(f"{path}.channel", f"channel {node.channel} is off the raster")
        else:
            for attr in ("uplink", "downlink"):
                ch = getattr(node, attr)
                if ch not in s.raster:
                    raise ScenarioError(f"{path}.{attr}", f"channel {ch} is off the raster")
    for i, u in enumerate(s.uavs):
        if not u.position.z > 0:
            raise ScenarioError(f"uavs[{i}].altitude_m", "UAV must be airborne")


@lru_cache(maxsize=1)
def scenario_schema() -> dict:
    text = resources.files("uavshare").joinpath("data/scenario.schema.json").read_text()
    return json.loads(text)


def _path(error: jsonschema.ValidationError) -> str:
    out = ""
    for part in error.absolute_path:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out or "<document>"


def _antenna(doc: dict) -> AntennaPattern:
    if doc["kind"] == "omni":
        return AntennaPattern.omni(doc.get("peak_gain_dbi", 0.0))
    return AntennaPattern.directional(doc["peak_gain_dbi"], doc["beamwidth_deg"],
                                      doc.get("sidelobe_floor_db", 25.0))


def _position(doc: dict) -> Position3D:
    return Position3D(float(doc["x"]), float(doc["y"]), float(doc["z"]))


def _noise(doc: dict | None, bandwidth: float) -> NoiseModel:
    doc = doc or {}
    return NoiseModel(doc.get("noise_figure_db", 6.0), doc.get("bandwidth_hz", bandwidth))


def load_scenario(document: dict | str | Path) -> Scenario:
    """Build a validated `Scenario` from a parsed document or a JSON file path."""
    if isinstance(document, (str, Path)):
        path = Path(document)
        try:
            document = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ScenarioError(str(path), f"not valid JSON: {exc}") from exc
    validator = jsonschema.Draft202012Validator(scenario_schema())
    errors = sorted(validator.iter_errors(document), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        err = errors[0]
        raise ScenarioError(_path(err), err.message)

    area = document["area"]
    try:
        bounds = AreaBounds(area["x_min"], area["x_max"], area["y_min"], area["y_max"])
    except GeometryError as exc:
        raise ScenarioError("area", str(exc)) from exc

    ch = document.get("channels", {})
    raster = ChannelRaster(ch.get("low_mhz", 5650.0), ch.get("spacing_mhz", 10.0),
                           ch.get("count", 10), ch.get("wlan_low_mhz", 5650.0),
                           ch.get("wlan_high_mhz", 5730.0))

    prop = document.get("propagation", {})
    try:
        pl = PathLossModel(prop.get("carrier_frequency_mhz", 5700.0),
                           prop.get("reference_distance_m", 1.0),
                           prop.get("reference_loss_db"),
                           prop.get("exponent_air", 2.0),
                           prop.get("exponent_ground", 4.0))
    except ValueError as exc:
        raise ScenarioError("propagation", str(exc)) from exc
    noise = document.get("noise", {})
    models = LinkModels(
        path_loss=pl,
        gs_noise=_noise(noise.get("gs"), 10e6),
        uav_noise=_noise(noise.get("uav"), 10e6),
        wlan_noise=_noise(noise.get("wlan"), 20e6),
        ue_distance=document.get("ue_distance_m", 5.0),
        building_entry_loss=prop.get("building_entry_loss_db", 0.0),
    )
    th = document.get("thresholds", {})
    thresholds = SharingThresholds(th.get("uplink_min_db", 11.0), th.get("downlink_min_db", 2.0),
                                   th.get("terrestrial_min_db", 2.0))

    cx, cy = bounds.center
    uavs = []
    for i, u in enumerate(document["uavs"]):
        try:
            uavs.append(RadioNode(u["id"], Role.UAV, Position3D(cx, cy, u["altitude_m"]),
                                  u["tx_power_dbm"], _antenna(u["antenna"]),
                                  uplink=u["uplink"], downlink=u["downlink"]))
        except ValueError as exc:
            raise ScenarioError(f"uavs[{i}]", str(exc)) from exc
    g = document["ground_station"]
    first = uavs[0]
    gs = RadioNode(g.get("id", "gs"), Role.GS, _position(g["position"]), g["tx_power_dbm"],
                   _antenna(g["antenna"]), uplink=first.uplink, downlink=first.downlink)
    routers = []
    for i, r in enumerate(document.get("routers", [])):
        routers.append(RadioNode(r["id"], Role.ROUTER, _position(r["position"]),
                                 r["tx_power_dbm"], AntennaPattern.omni(r.get("gain_dbi", 0.0)),
                                 channel=r["channel"]))
    return Scenario(bounds, gs, tuple(uavs), tuple(routers), models, thresholds, raster,
                    document.get("eirp_limit_dbm", 36.0),
                    Mode(document.get("mode", "proposed")))


def _antenna_doc(a: AntennaPattern) -> dict:
    if a.is_omni:
        return {"kind": "omni", "peak_gain_dbi": a.peak_gain}
    return {"kind": "directional", "peak_gain_dbi": a.peak_gain,
            "beamwidth_deg": a.beamwidth_3db, "sidelobe_floor_db": a.sidelobe_floor}


def _position_doc(p: Position3D) -> dict:
    return {"x": p.x, "y": p.y, "z": p.z}


def _noise_doc(n: NoiseModel) -> dict:
    return {"noise_figure_db": n.noise_figure, "bandwidth_hz": n.bandwidth}


def scenario_to_document(s: Scenario) -> dict[str, Any]:
    """Inverse of `load_scenario`; every field is written out explicitly."""
    m = s.models
    return {
        "schema_version": SCHEMA_VERSION,
        "mode": s.mode.value,
        "area": {"x_min": s.bounds.x_min, "x_max": s.bounds.x_max,
                 "y_min": s.bounds.y_min, "y_max": s.bounds.y_max},
        "channels": {"low_mhz": s.raster.low_mhz, "spacing_mhz": s.raster.spacing_mhz,
                     "count": s.raster.count, "wlan_low_mhz": s.raster.wlan_low_mhz,
                     "wlan_high_mhz": s.raster.wlan_high_mhz},
        "propagation": {"carrier_frequency_mhz": m.path_loss.carrier_frequency,
                        "reference_distance_m": m.path_loss.reference_distance,
                        "reference_loss_db": m.path_loss.reference_loss,
                        "exponent_air": m.path_loss.exponent_air,
                        "exponent_ground": m.path_loss.exponent_ground,
                        "building_entry_loss_db": m.building_entry_loss},
        "noise": {"gs": _noise_doc(m.gs_noise), "uav": _noise_doc(m.uav_noise),
                  "wlan": _noise_doc(m.wlan_noise)},
        "thresholds": {"uplink_min_db": s.thresholds.uplink_min,
                       "downlink_min_db": s.thresholds.downlink_min,
                       "terrestrial_min_db": s.thresholds.terrestrial_min},
        "ue_distance_m": m.ue_distance,
        "eirp_limit_dbm": s.eirp_limit,
        "ground_station": {"id": s.gs.id, "position": _position_doc(s.gs.position),
                           "tx_power_dbm": s.gs.tx_power, "antenna": _antenna_doc(s.gs.antenna)},
        "uavs": [{"id": u.id, "altitude_m": u.position.z, "tx_power_dbm": u.tx_power,
                  "antenna": _antenna_doc(u.antenna), "uplink": u.uplink,
                  "downlink": u.downlink} for u in s.uavs],
        "routers": [{"id": r.id, "position": _position_doc(r.position),
                     "tx_power_dbm": r.tx_power, "gain_dbi": r.antenna.peak_gain,
                     "channel": r.channel} for r in s.routers],
    }


def bundled_path(name: str) -> Path:
    """Path of a fixture shipped in ``uavshare/data`` (e.g. ``paper_table1.json``)."""
    return Path(str(resources.files("uavshare").joinpath("data", name)))
