"""Seeded random router layouts and the Monte Carlo experiment harness.

Randomness comes only from numpy's PCG64 bit generator seeded through
``numpy.random.SeedSequence(master_seed, spawn_key=(trial,))``. Trial ``i``
therefore depends only on ``(master_seed, i)`` and can be replayed alone.
Within a trial, router positions are drawn as one ``(count, 2)`` uniform
array (x then y per router) over the area bounds.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .antenna import AntennaPattern
from .coverage import GridSpec, LinkTerms, compute_flyable_grid
from .geometry import AreaBounds, Position3D
from .link import RadioNode, Role
from .planner import (
    PartitionStrategy,
    allocate_channels,
    best_fixed_pair,
    optimize_gs,
    partition_area,
)
from .scenario import (
    DEFAULT_ROUTER_HEIGHT,
    Mode,
    Scenario,
    ScenarioError,
    load_scenario,
    scenario_to_document,
)

log = logging.getLogger(__name__)

MIX_OFFSETS = {"co": 0, "adjacent": 1, "next_adjacent": 2}
PAPER_MIX = ("co", "co", "adjacent", "next_adjacent")


class ExperimentError(RuntimeError):
    def __init__(self, trial: int, seed: int, cause: Exception):
        super().__init__(f"trial {trial} failed (replay with seed={seed}, trial={trial}): {cause}")
        self.trial = trial
        self.seed = seed


def trial_rng(seed: int, trial: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(trial,))))


def _offset(entry) -> int:
    if isinstance(entry, str):
        try:
            return MIX_OFFSETS[entry]
        except KeyError:
            raise ValueError(f"unknown channel-mix entry {entry!r}") from None
    return int(entry)


def mix_channels(channel_mix: Sequence, reference: int, n_channels: int) -> list[int]:
    """Channels for a mix given relative to `reference` (the UAV uplink).

    An offset of k maps to ``reference + k`` if that is on the raster,
    otherwise ``reference - k``.
    """
    out = []
    for entry in channel_mix:
        k = _offset(entry)
        ch = reference + k if reference + k < n_channels else reference - k
        if not 0 <= ch < n_channels:
            raise ValueError(f"offset {k} from channel {reference} falls off the raster")
        out.append(ch)
    return out


def generate_routers(seed: int | np.random.Generator, bounds: AreaBounds, count: int,
                     channel_mix: Sequence, height: float = DEFAULT_ROUTER_HEIGHT, *,
                     tx_power: float = 20.0, reference_channel: int = 0,
                     n_channels: int = 10, trial: int = 0) -> list[RadioNode]:
    if count != len(channel_mix):
        raise ValueError(f"count {count} does not match channel mix of length {len(channel_mix)}")
    rng = seed if isinstance(seed, np.random.Generator) else trial_rng(seed, trial)
    xy = rng.uniform([bounds.x_min, bounds.y_min], [bounds.x_max, bounds.y_max], size=(count, 2))
    channels = mix_channels(channel_mix, reference_channel, n_channels)
    return [RadioNode(f"router{i + 1}", Role.ROUTER,
                      Position3D(float(xy[i, 0]), float(xy[i, 1]), height),
                      tx_power, AntennaPattern.omni(0.0), channel=channels[i])
            for i in range(count)]


@dataclass(frozen=True)
class RouterTemplate:
    count: int = 4
    channel_mix: tuple = PAPER_MIX
    height: float = DEFAULT_ROUTER_HEIGHT
    tx_power: float = 20.0

    def __post_init__(self):
        object.__setattr__(self, "channel_mix", tuple(self.channel_mix))
        if self.count != len(self.channel_mix):
            raise ValueError("router count must match the channel mix length")


@dataclass(frozen=True)
class ExperimentSpec:
    trials: int = 30
    seed: int = 0
    routers: RouterTemplate = field(default_factory=RouterTemplate)
    candidate_resolution: float = 50.0
    grid_resolution: float = 10.0
    uav_count: int = 3
    partition: PartitionStrategy = PartitionStrategy.STRIPS
    modes: tuple[Mode, ...] = (Mode.PROPOSED, Mode.CONVENTIONAL)

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.uav_count < 0:
            raise ValueError("uav_count must be >= 0")
        object.__setattr__(self, "partition", PartitionStrategy(self.partition))
        object.__setattr__(self, "modes", tuple(Mode(m) for m in self.modes))

    def to_document(self) -> dict:
        r = self.routers
        return {"trials": self.trials, "seed": self.seed,
                "routers": {"count": r.count, "channel_mix": list(r.channel_mix),
                            "height_m": r.height, "tx_power_dbm": r.tx_power},
                "candidate_resolution_m": self.candidate_resolution,
                "grid_resolution_m": self.grid_resolution,
                "uav_count": self.uav_count, "partition": self.partition.value,
                "modes": [m.value for m in self.modes]}


_EXPERIMENT_KEYS = {"trials", "seed", "routers", "candidate_resolution_m", "grid_resolution_m",
                    "uav_count", "partition", "modes"}
_ROUTER_KEYS = {"count", "channel_mix", "height_m", "tx_power_dbm"}


def experiment_from_document(doc: dict) -> ExperimentSpec:
    unknown = set(doc) - _EXPERIMENT_KEYS
    if unknown:
        raise ScenarioError("experiment", f"unknown fields {sorted(unknown)}")
    r = doc.get("routers", {})
    unknown = set(r) - _ROUTER_KEYS
    if unknown:
        raise ScenarioError("experiment.routers", f"unknown fields {sorted(unknown)}")
    try:
        template = RouterTemplate(r.get("count", 4), tuple(r.get("channel_mix", PAPER_MIX)),
                                  r.get("height_m", DEFAULT_ROUTER_HEIGHT),
                                  r.get("tx_power_dbm", 20.0))
        for entry in template.channel_mix:
            _offset(entry)
        return ExperimentSpec(doc.get("trials", 30), doc.get("seed", 0), template,
                              doc.get("candidate_resolution_m", 50.0),
                              doc.get("grid_resolution_m", 10.0), doc.get("uav_count", 3),
                              doc.get("partition", "strips"),
                              tuple(doc.get("modes", ("proposed", "conventional"))))
    except (TypeError, ValueError) as exc:
        raise ScenarioError("experiment", str(exc)) from exc


def read_experiment_document(path: str | Path) -> tuple[dict, dict | None]:
    """Split a file into ``(scenario_document, experiment_document_or_None)``.

    A file without an ``experiment`` section is a bare scenario. The
    scenario part of an experiment may be inline or a file name relative to
    the experiment file.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(str(path), f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "experiment" not in doc:
        return doc, None
    unknown = set(doc) - {"schema_version", "scenario", "experiment"}
    if unknown:
        raise ScenarioError("<document>", f"unknown fields {sorted(unknown)}")
    scen = doc.get("scenario")
    if isinstance(scen, str):
        inner = path.parent / scen
        try:
            scen = json.loads(inner.read_text())
        except json.JSONDecodeError as exc:
            raise ScenarioError(str(inner), f"not valid JSON: {exc}") from exc
    if not isinstance(scen, dict):
        raise ScenarioError("scenario", "expected an inline scenario or a relative file name")
    if not isinstance(doc["experiment"], dict):
        raise ScenarioError("experiment", "expected an object")
    return scen, doc["experiment"]


def load_experiment(path: str | Path) -> tuple[Scenario, ExperimentSpec]:
    """Read an experiment document, or a bare scenario with default experiment settings."""
    scen, exp = read_experiment_document(path)
    spec = ExperimentSpec() if exp is None else experiment_from_document(exp)
    return load_scenario(scen), spec


@dataclass
class TrialRecord:
    trial: int
    routers: list[RadioNode]
    values: dict[str, float]


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    scenario: Scenario
    records: list[TrialRecord]

    @property
    def columns(self) -> list[str]:
        return list(self.records[0].values) if self.records else []

    def column(self, name: str) -> np.ndarray:
        return np.array([r.values[name] for r in self.records], dtype=float)

    def summary(self) -> dict:
        out = {}
        for name in self.columns:
            if name.endswith("ratio"):
                v = self.column(name)
                out[name] = {"mean": float(np.mean(v)), "min": float(np.min(v)),
                             "max": float(np.max(v))}
        return out


def run_trial(scenario: Scenario, spec: ExperimentSpec, trial: int,
              threads: int = 1) -> TrialRecord:
    routers = generate_routers(spec.seed, scenario.bounds, spec.routers.count,
                               spec.routers.channel_mix, spec.routers.height,
                               tx_power=spec.routers.tx_power,
                               reference_channel=scenario.uavs[0].uplink,
                               n_channels=scenario.raster.count, trial=trial)
    base = scenario.with_routers(routers)
    grid = GridSpec(scenario.bounds, spec.grid_resolution, scenario.altitude)
    cx, cy = scenario.bounds.center
    center = Position3D(cx, cy, scenario.gs.position.z)
    values: dict[str, float] = {}
    for mode in spec.modes:
        s = base.with_mode(mode)
        m = mode.value
        placement = optimize_gs(s, spec.candidate_resolution, grid, threads=threads)
        values[f"{m}_ratio"] = placement.best_ratio
        values[f"{m}_gs_x"] = placement.best_position.x
        values[f"{m}_gs_y"] = placement.best_position.y
        values[f"{m}_center_ratio"] = compute_flyable_grid(s, center, grid).flyable_ratio
        if spec.uav_count >= 1:
            placed = s.with_gs_position(placement.best_position)
            terms = LinkTerms(placed, placement.best_position, grid)
            subs = partition_area(s.bounds, spec.uav_count, spec.partition,
                                  placement.best_position, grid)
            plan = allocate_channels(placed, subs, grid, terms=terms)
            _, fixed = best_fixed_pair(placed, grid, terms=terms)
            values[f"{m}_combined_ratio"] = plan.combined_ratio
            values[f"{m}_fixed_pair_ratio"] = fixed
            values[f"{m}_allocation_warning"] = float(plan.warning)
    return TrialRecord(trial, routers, values)


def run_experiment(spec: ExperimentSpec, scenario: Scenario, threads: int = 1,
                   progress=None) -> ExperimentResult:
    records = []
    for i in range(spec.trials):
        try:
            records.append(run_trial(scenario, spec, i, threads))
        except Exception as exc:
            raise ExperimentError(i, spec.seed, exc) from exc
        if progress:
            progress(i, records[-1])
    return ExperimentResult(spec, scenario, records)


def experiment_document(scenario: Scenario, spec: ExperimentSpec) -> dict:
    return {"schema_version": 1, "scenario": scenario_to_document(scenario),
            "experiment": spec.to_document()}

