"""GS placement, area partitioning and per-sub-area channel allocation."""
from __future__ import annotations

import enum
import itertools
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .coverage import FlyableGrid, GridGeometry, GridSpec, LinkTerms
from .geometry import AreaBounds, Position3D
from .scenario import Scenario

log = logging.getLogger(__name__)


def resolve_threads(threads: int) -> int:
    """0 means one worker per CPU."""
    if threads == 0:
        return os.cpu_count() or 1
    return max(1, int(threads))


@dataclass(frozen=True)
class CandidateLattice:
    """GS candidates on a square lattice anchored at the south-west corner.

    Unlike `GridSpec` these are lattice nodes, so bounds edges (and the area
    centre, when it falls on the lattice) are candidates.
    """
    bounds: AreaBounds
    resolution: float = 50.0
    height: float = 2.0

    def __post_init__(self):
        if not self.resolution > 0:
            raise ValueError("candidate resolution must be positive")

    def _axis(self, lo: float, hi: float) -> np.ndarray:
        n = math.floor((hi - lo) / self.resolution + 1e-9)
        return lo + self.resolution * np.arange(n + 1)

    @property
    def xs(self) -> np.ndarray:
        return self._axis(self.bounds.x_min, self.bounds.x_max)

    @property
    def ys(self) -> np.ndarray:
        return self._axis(self.bounds.y_min, self.bounds.y_max)

    def positions(self) -> list[Position3D]:
        return [Position3D(float(x), float(y), self.height) for y in self.ys for x in self.xs]


@dataclass(frozen=True)
class PlacementResult:
    best_position: Position3D
    best_ratio: float
    candidates: CandidateLattice
    ratios: np.ndarray  # (ny, nx) over candidates.ys x candidates.xs
    grid: GridSpec

    def ratio_at(self, x: float, y: float) -> float:
        iy = int(np.argmin(np.abs(self.candidates.ys - y)))
        ix = int(np.argmin(np.abs(self.candidates.xs - x)))
        if self.candidates.xs[ix] != x or self.candidates.ys[iy] != y:
            raise KeyError(f"({x}, {y}) is not a candidate")
        return float(self.ratios[iy, ix])


def default_grid(scenario: Scenario, resolution: float = 10.0, uav_index: int = 0) -> GridSpec:
    return GridSpec(scenario.bounds, resolution, scenario.uavs[uav_index].position.z)


def optimize_gs(scenario: Scenario, candidate_resolution: float = 50.0,
                grid: GridSpec | None = None, *, uav_index: int = 0,
                channels: tuple[int, int] | None = None, threads: int = 1) -> PlacementResult:
    """Exhaustive GS search maximising the flyable ratio.

    Ties go to the candidate closest (horizontally) to the area centre, then
    to the smallest (x, y).
    """
    grid = grid or default_grid(scenario, uav_index=uav_index)
    lattice = CandidateLattice(scenario.bounds, candidate_resolution, scenario.gs.position.z)
    positions = lattice.positions()
    geometry = GridGeometry(scenario, grid)
    pair = channels or (None, None)

    def count(pos: Position3D) -> int:
        terms = LinkTerms(scenario, pos, grid, uav_index, geometry=geometry)
        return int(np.count_nonzero(terms.pass_mask(*pair)))

    workers = resolve_threads(threads)
    if workers == 1:
        counts = [count(p) for p in positions]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(count, positions))

    cx, cy = scenario.bounds.center

    def key(i: int):
        p = positions[i]
        return (-counts[i], math.hypot(p.x - cx, p.y - cy), p.x, p.y)

    best = min(range(len(positions)), key=key)
    ratios = np.array(counts, dtype=float).reshape(len(lattice.ys), len(lattice.xs)) / grid.size
    return PlacementResult(positions[best], counts[best] / grid.size, lattice, ratios, grid)


class PartitionStrategy(enum.Enum):
    STRIPS = "strips"
    SECTORS = "sectors"


@dataclass(frozen=True)
class SubArea:
    """One UAV's share of the target area.

    Membership is half-open so sub-areas tile the bounds exactly. Strips own
    ``[x0, x1)`` (the last one also owns ``x_max``). Sectors are defined by
    the sweep order about the GS, i.e. the key ``(angle, radius)`` with
    ``angle = atan2(dy, dx)``: a sector owns keys in ``[lower, upper)``
    compared lexicographically, so cells on a boundary ray are split by
    distance from the GS.
    """
    index: int
    polygon: tuple[tuple[float, float], ...]
    strategy: PartitionStrategy
    lower: float | tuple[float, float]
    upper: float | tuple[float, float]
    last: bool
    origin: tuple[float, float] = (0.0, 0.0)
    uplink: int | None = None
    downlink: int | None = None

    def mask(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.strategy is PartitionStrategy.STRIPS:
            v = x + 0.0 * y
            inside = v >= self.lower
            inside &= (v <= self.upper) if self.last else (v < self.upper)
            return inside
        a, r = _sweep_key(x, y, self.origin)
        (la, lr), (ua, ur) = self.lower, self.upper
        above = (a > la) | ((a == la) & (r >= lr))
        below = (a < ua) | ((a == ua) & (r < ur))
        return above & below

    def contains(self, x: float, y: float) -> bool:
        return bool(self.mask(x, y))

    @property
    def area(self) -> float:
        pts = self.polygon
        return 0.5 * abs(sum(x1 * y2 - x2 * y1
                             for (x1, y1), (x2, y2) in zip(pts, pts[1:] + pts[:1])))


def _sweep_key(x, y, origin) -> tuple[np.ndarray, np.ndarray]:
    dx, dy = x - origin[0], y - origin[1]
    return np.arctan2(dy, dx), np.hypot(dx, dy)


def _clip(poly: list[tuple[float, float]], bounds: AreaBounds) -> list[tuple[float, float]]:
    """Sutherland-Hodgman clip of `poly` to the (convex) bounds rectangle."""
    edges = [(0, bounds.x_min, 1), (0, bounds.x_max, -1), (1, bounds.y_min, 1), (1, bounds.y_max, -1)]
    for axis, value, sign in edges:
        if not poly:
            break
        src, poly = poly, []
        for i, cur in enumerate(src):
            prev = src[i - 1]
            cin = sign * (cur[axis] - value) >= 0
            pin = sign * (prev[axis] - value) >= 0
            if cin != pin:
                t = (value - prev[axis]) / (cur[axis] - prev[axis])
                cut = [prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])]
                cut[axis] = value
                poly.append(tuple(cut))
            if cin:
                poly.append(cur)
    return poly


def _sector_polygon(bounds: AreaBounds, ox: float, oy: float,
                    a0: float, a1: float) -> tuple[tuple[float, float], ...]:
    # A wedge reaching far outside the area, clipped to it.
    reach = 4.0 * math.hypot(bounds.width, bounds.height)
    steps = max(2, math.ceil((a1 - a0) / (math.pi / 8)) + 1)
    wedge = [(ox, oy)] + [(ox + reach * math.cos(t), oy + reach * math.sin(t))
                          for t in np.linspace(a0, a1, steps)]
    out = []
    for p in _clip(wedge, bounds):
        if not out or math.dist(p, out[-1]) > 1e-9:
            out.append(p)
    if len(out) > 1 and math.dist(out[0], out[-1]) <= 1e-9:
        out.pop()
    return tuple(out)


def partition_area(bounds: AreaBounds, n: int,
                   strategy: PartitionStrategy | str = PartitionStrategy.STRIPS,
                   gs: Position3D | None = None, grid: GridSpec | None = None) -> list[SubArea]:
    """Split the area into `n` equal-area sub-areas, one per UAV.

    Strips are vertical and exactly equal in area. Sectors radiate from the
    GS; sweeping the grid cells by angle (then distance) and cutting the
    sweep every N/n cells gives cell counts equal to within one.
    """
    strategy = PartitionStrategy(strategy)
    if n < 1:
        raise ValueError("need at least one sub-area")
    grid = grid or GridSpec(bounds, 10.0, 30.0)
    if n > grid.size:
        raise ValueError(f"{n} sub-areas exceed the {grid.size} grid cells")

    if strategy is PartitionStrategy.STRIPS:
        w = bounds.width / n
        edges = [bounds.x_min + i * w for i in range(n)] + [bounds.x_max]
        return [SubArea(i, ((edges[i], bounds.y_min), (edges[i + 1], bounds.y_min),
                            (edges[i + 1], bounds.y_max), (edges[i], bounds.y_max)),
                        strategy, edges[i], edges[i + 1], i == n - 1)
                for i in range(n)]

    if gs is None:
        gs = Position3D(*bounds.center)
    origin = (gs.x, gs.y)
    X, Y = grid.mesh()
    a, r = _sweep_key(X.ravel(), Y.ravel(), origin)
    order = np.lexsort((r, a))
    N = len(order)
    keys = [(-math.inf, -math.inf)]
    angles = [-math.pi]
    for k in range(1, n):
        j, prev = order[(k * N) // n], order[(k * N) // n - 1]
        keys.append((float(a[j]), float(r[j])))
        # Drawn edge halfway between the neighbouring cells; membership uses the keys.
        angles.append(0.5 * (float(a[prev]) + float(a[j])))
    keys.append((math.inf, math.inf))
    angles.append(math.pi)
    out = []
    for i in range(n):
        if n == 1:
            poly = tuple(bounds.corners())
        else:
            poly = _sector_polygon(bounds, gs.x, gs.y, angles[i], angles[i + 1])
        out.append(SubArea(i, poly, strategy, keys[i], keys[i + 1], i == n - 1, origin))
    return out


@dataclass(frozen=True)
class AllocationPlan:
    sub_areas: tuple[SubArea, ...]
    combined_grid: FlyableGrid
    sub_ratios: tuple[float, ...]
    infeasible: tuple[int, ...] = ()  # sub-areas where no pair passes anywhere
    pair_scores: dict = field(default_factory=dict, compare=False)

    @property
    def combined_ratio(self) -> float:
        return self.combined_grid.flyable_ratio

    @property
    def warning(self) -> bool:
        return bool(self.infeasible)


def channel_pairs(scenario: Scenario) -> list[tuple[int, int]]:
    return [(u, d) for u, d in itertools.permutations(scenario.raster, 2)]


def _min_offset(pair: tuple[int, int], router_channels: Sequence[int]) -> float:
    if not router_channels:
        return math.inf
    return min(abs(c - rc) for c in pair for rc in router_channels)


def allocate_channels(scenario: Scenario, sub_areas: Sequence[SubArea],
                      grid: GridSpec | None = None, *, uav_index: int = 0,
                      terms: LinkTerms | None = None) -> AllocationPlan:
    """Pick the best (uplink, downlink) pair for each sub-area independently.

    Pairs are scored by the flyable fraction inside the sub-area, with
    interference from every router in the scenario. Ties prefer pairs far
    (in channel offset) from routers inside the sub-area, then the lowest
    (uplink, downlink).
    """
    if scenario.raster.count < 2:
        raise ValueError("channel allocation needs at least two channels")
    grid = grid or default_grid(scenario, uav_index=uav_index)
    if terms is None:
        terms = LinkTerms(scenario, scenario.gs.position, grid, uav_index)
    X, Y = grid.mesh()
    masks = [sa.mask(X, Y).ravel() for sa in sub_areas]
    pairs = channel_pairs(scenario)
    counts = np.empty((len(pairs), len(sub_areas)), dtype=np.int64)
    for i, pair in enumerate(pairs):
        passed = terms.pass_mask(*pair)
        counts[i] = [np.count_nonzero(passed & m) for m in masks]

    chosen, ratios, infeasible = [], [], []
    for j, sa in enumerate(sub_areas):
        total = int(np.count_nonzero(masks[j]))
        if total == 0:
            raise ValueError(f"sub-area {sa.index} contains no grid points")
        inside = [r.channel for r in scenario.routers
                  if sa.contains(r.position.x, r.position.y)]
        best = min(range(len(pairs)),
                   key=lambda i: (-counts[i, j], -_min_offset(pairs[i], inside), pairs[i]))
        if counts[best, j] == 0:
            log.warning("sub-area %d: no channel pair passes anywhere; keeping %s",
                        sa.index, pairs[best])
            infeasible.append(sa.index)
        u, d = pairs[best]
        chosen.append(SubArea(sa.index, sa.polygon, sa.strategy, sa.lower, sa.upper, sa.last,
                              sa.origin, u, d))
        ratios.append(counts[best, j] / total)

    combined = _stitch(terms, chosen, masks)
    scores = {pair: tuple(int(c) for c in counts[i]) for i, pair in enumerate(pairs)}
    return AllocationPlan(tuple(chosen), combined, tuple(ratios), tuple(infeasible), scores)


def _stitch(terms: LinkTerms, sub_areas: Sequence[SubArea], masks) -> FlyableGrid:
    grids = [terms.evaluate(sa.uplink, sa.downlink) for sa in sub_areas]
    shape = terms.grid.shape
    owner = np.full(terms.grid.size, -1)
    for j, m in enumerate(masks):
        owner[m & (owner < 0)] = j
    owner = owner.reshape(shape)

    def pick(attr):
        arrays = [getattr(g, attr) for g in grids]
        out = arrays[0].copy()
        for j, a in enumerate(arrays[1:], start=1):
            sel = owner == j
            out[..., sel] = a[..., sel]
        return out

    first = grids[0]
    return FlyableGrid(
        spec=first.spec,
        passed=pick("passed"),
        worst_margin=pick("worst_margin"),
        binding=pick("binding"),
        uplink_sinr=pick("uplink_sinr"),
        downlink_sinr=pick("downlink_sinr"),
        terrestrial_sinr=pick("terrestrial_sinr"),
        clamped=first.clamped,
        gs_position=first.gs_position,
        channels=None,
    )


def best_fixed_pair(scenario: Scenario, grid: GridSpec | None = None, *, uav_index: int = 0,
                    terms: LinkTerms | None = None) -> tuple[tuple[int, int], float]:
    """Best single channel pair over the whole area (no partitioning)."""
    grid = grid or default_grid(scenario, uav_index=uav_index)
    if terms is None:
        terms = LinkTerms(scenario, scenario.gs.position, grid, uav_index)
    best = max(channel_pairs(scenario),
               key=lambda p: (int(np.count_nonzero(terms.pass_mask(*p))), tuple(-c for c in p)))
    return best, int(np.count_nonzero(terms.pass_mask(*best))) / grid.size


@dataclass(frozen=True)
class ChannelConflict:
    first: int
    second: int
    link: str  # "uplink" or "downlink"
    channel: int


def cross_subarea_channel_check(plan: AllocationPlan) -> list[ChannelConflict]:
    """Sub-area pairs reusing the same uplink or the same downlink channel.

    Informational only: UAV-to-UAV interference is not modelled.
    """
    out = []
    for a, b in itertools.combinations(plan.sub_areas, 2):
        for link in ("uplink", "downlink"):
            if getattr(a, link) == getattr(b, link):
                out.append(ChannelConflict(a.index, b.index, link, getattr(a, link)))
    return out
