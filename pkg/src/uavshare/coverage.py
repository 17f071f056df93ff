"""Flyable-area maps: the sharing conditions evaluated over a horizontal grid.

The UAV is placed at every cell centre at a fixed altitude, with beams
aligned to the GS. Geometry-dependent terms are computed once per GS
position (`LinkTerms`); a channel pair then only re-weights them by the
adjacent-channel rejection, which keeps channel scans cheap.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import AreaBounds, Position3D
from .link import Condition
from .propagation import (
    LinkClass,
    channel_rejection,
    dbm_to_mw,
    mw_to_dbm,
    noise_power,
    path_loss_array,
)
from .scenario import Scenario


@dataclass(frozen=True)
class GridSpec:
    bounds: AreaBounds
    resolution: float = 10.0
    altitude: float = 30.0

    def __post_init__(self):
        if not self.resolution > 0:
            raise ValueError(f"resolution must be positive, got {self.resolution}")
        if not self.altitude > 0:
            raise ValueError(f"altitude must be positive (UAV airborne), got {self.altitude}")

    def _centers(self, lo: float, hi: float) -> np.ndarray:
        n = math.ceil((hi - lo) / self.resolution - 1e-9)
        edges = np.minimum(lo + self.resolution * np.arange(n + 1), hi)
        return 0.5 * (edges[:-1] + edges[1:])

    @property
    def xs(self) -> np.ndarray:
        return self._centers(self.bounds.x_min, self.bounds.x_max)

    @property
    def ys(self) -> np.ndarray:
        return self._centers(self.bounds.y_min, self.bounds.y_max)

    @property
    def shape(self) -> tuple[int, int]:
        """(ny, nx); row index runs south to north."""
        return len(self.ys), len(self.xs)

    @property
    def size(self) -> int:
        ny, nx = self.shape
        return ny * nx

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.xs, self.ys)

    def points(self) -> np.ndarray:
        """(N, 3) UAV positions in row-major (y outer, x inner) order."""
        X, Y = self.mesh()
        return np.column_stack([X.ravel(), Y.ravel(), np.full(X.size, self.altitude)])


@dataclass(frozen=True)
class FlyableGrid:
    spec: GridSpec
    passed: np.ndarray  # (ny, nx) bool
    worst_margin: np.ndarray  # (ny, nx) dB
    binding: np.ndarray  # (ny, nx) int8, values of `Condition`
    uplink_sinr: np.ndarray
    downlink_sinr: np.ndarray
    terrestrial_sinr: np.ndarray  # (n_routers, ny, nx)
    clamped: np.ndarray  # close-in distance or degenerate pointing at this point
    gs_position: Position3D
    channels: tuple[int, int] | None  # None for a grid stitched from several pairs

    @property
    def pass_count(self) -> int:
        return int(np.count_nonzero(self.passed))

    @property
    def flyable_ratio(self) -> float:
        return self.pass_count / self.passed.size


class EmptyRegionError(ValueError):
    pass


def point_in_polygon(x: np.ndarray, y: np.ndarray, polygon: Sequence[tuple[float, float]]) -> np.ndarray:
    """Even-odd ray casting; boundary points may fall on either side."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    inside = np.zeros(np.broadcast(x, y).shape, dtype=bool)
    n = len(polygon)
    for i in range(n):
        x1, y1 = polygon[i]
        x2, y2 = polygon[(i + 1) % n]
        if y1 == y2:
            continue
        crosses = (y1 > y) != (y2 > y)
        x_at = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (x < x_at)
    return inside


def region_mask(spec: GridSpec, region) -> np.ndarray:
    """Boolean (ny, nx) mask of cell centres inside `region`.

    `region` is either a polygon (sequence of (x, y) vertices) or an object
    with a ``mask(x, y)`` method such as `uavshare.planner.SubArea`.
    """
    X, Y = spec.mesh()
    if hasattr(region, "mask"):
        return region.mask(X, Y)
    return point_in_polygon(X, Y, region)


def flyable_ratio_within(grid: FlyableGrid, region) -> float:
    mask = region_mask(grid.spec, region)
    total = int(np.count_nonzero(mask))
    if total == 0:
        raise EmptyRegionError("region contains no grid points")
    return int(np.count_nonzero(grid.passed & mask)) / total


class GridGeometry:
    """GS-independent geometry of a grid against the scenario's routers.

    Reused across GS candidates: UAV-to-router vectors and their air path loss.
    """

    def __init__(self, scenario: Scenario, grid: GridSpec):
        self.grid = grid
        self.routers = scenario.routers
        self.path_loss = scenario.models.path_loss
        P = grid.points()
        self.x, self.y, self.z = P[:, 0].copy(), P[:, 1].copy(), P[:, 2].copy()
        K, N = len(self.routers), len(P)
        self.to_router = np.empty((K, 3, N))
        self.d_router = np.empty((K, N))
        self.pl_router = np.empty((K, N))
        self.clamped = np.zeros(N, dtype=bool)
        pl = scenario.models.path_loss
        for k, r in enumerate(self.routers):
            rx, ry, rz = r.position.x, r.position.y, r.position.z
            v = self.to_router[k]
            v[0], v[1], v[2] = rx - self.x, ry - self.y, rz - self.z
            self.d_router[k] = np.sqrt(v[0] ** 2 + v[1] ** 2 + v[2] ** 2)
            self.pl_router[k], cl = path_loss_array(pl, LinkClass.AIR_TO_GROUND, self.d_router[k])
            self.clamped |= cl | (self.d_router[k] == 0.0)
        self.air_mw = dbm_to_mw(-self.pl_router)

    def matches(self, scenario: Scenario, grid: GridSpec) -> bool:
        return (grid == self.grid and scenario.routers == self.routers
                and scenario.models.path_loss == self.path_loss)


def _gain_mw(pattern, cos_t: np.ndarray | None):
    """Linear antenna gain from the cosine of the off-boresight angle.

    Same parabolic pattern as `uavshare.antenna.gain`, evaluated in radians;
    only main-lobe points pay for the arccos. Omni patterns return a scalar.
    """
    if pattern.is_omni:
        return 10.0 ** (pattern.peak_gain / 10.0)
    bw = math.radians(pattern.beamwidth_3db)
    theta_floor = bw * math.sqrt(pattern.sidelobe_floor / 12.0)
    out = np.full(cos_t.shape, 10.0 ** ((pattern.peak_gain - pattern.sidelobe_floor) / 10.0))
    if theta_floor >= math.pi:
        main = np.ones(cos_t.shape, dtype=bool)
    else:
        main = cos_t > math.cos(theta_floor)
    theta = np.arccos(np.clip(cos_t[main], -1.0, 1.0))
    att = np.minimum((12.0 / bw ** 2) * theta * theta, pattern.sidelobe_floor)
    out[main] = np.exp((pattern.peak_gain - att) * _DB_TO_NEPER)
    return out


_DB_TO_NEPER = math.log(10.0) / 10.0


class LinkTerms:
    """Channel-independent link-budget terms for one GS position over a grid.

    Per router two linear path gains are kept: router<->UAV ("air", with the
    UAV antenna gain toward the router) and router<->GS ("ground", with the GS
    antenna gain). Transmit powers and channel rejection are applied in
    `evaluate`, so a channel scan reuses the same terms.
    """

    def __init__(self, scenario: Scenario, gs_position: Position3D, grid: GridSpec,
                 uav_index: int = 0, threads: int = 1, geometry: GridGeometry | None = None):
        self.scenario = scenario
        self.grid = grid
        uav, gs = scenario.link_nodes(uav_index)
        gs = gs.moved(gs_position)
        self.uav, self.gs = uav, gs
        self.routers = scenario.routers
        if geometry is None or not geometry.matches(scenario, grid):
            geometry = GridGeometry(scenario, grid)
        self.geometry = geometry
        m = scenario.models
        self.noise_gs_mw = float(dbm_to_mw(noise_power(m.gs_noise)))
        self.noise_uav_mw = float(dbm_to_mw(noise_power(m.uav_noise)))
        self.noise_wlan_mw = float(dbm_to_mw(noise_power(m.wlan_noise)))
        pl_ue, _ = path_loss_array(m.path_loss, LinkClass.GROUND_TO_GROUND, m.ue_distance)
        self.terrestrial_signal = np.array(
            [r.tx_power + r.antenna.peak_gain - float(pl_ue) for r in self.routers])

        chunks = _split(grid.size, threads)
        if len(chunks) == 1:
            self.terms = self._compute(chunks[0])
        else:
            with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
                parts = list(pool.map(self._compute, chunks))
            self.terms = {k: np.concatenate([p[k] for p in parts], axis=v.ndim - 1)
                          for k, v in parts[0].items()}

    def _compute(self, sl: slice) -> dict[str, np.ndarray]:
        uav, gs, m, geo = self.uav, self.gs, self.scenario.models, self.geometry
        gx, gy, gz = gs.position.x, gs.position.y, gs.position.z
        # UAV boresight, UAV -> GS; the GS boresight is its negation.
        bx, by, bz = gx - geo.x[sl], gy - geo.y[sl], gz - geo.z[sl]
        d_ug = np.sqrt(bx * bx + by * by + bz * bz)
        pl_ug, clamped = path_loss_array(m.path_loss, LinkClass.AIR_TO_GROUND, d_ug)
        coincident = d_ug == 0.0
        any_coincident = bool(coincident.any())
        clamped = clamped | coincident | geo.clamped[sl]
        if any_coincident:
            d_ug = np.where(coincident, 1.0, d_ug)
        boresight_gain = uav.antenna.peak_gain + gs.antenna.peak_gain
        K, N = len(self.routers), len(d_ug)
        air = np.empty((K, N))
        ground = np.empty((K, N))
        bel = m.building_entry_loss
        for k, r in enumerate(self.routers):
            rg = r.antenna.peak_gain
            # GS side: fixed GS-router vector, boresight varies with the UAV.
            vx, vy, vz = r.position.x - gx, r.position.y - gy, r.position.z - gz
            d_gr = math.sqrt(vx * vx + vy * vy + vz * vz)
            pl_gr, cl_gr = path_loss_array(m.path_loss, LinkClass.GROUND_TO_GROUND, d_gr)
            if gs.antenna.is_omni:
                g_gs = _gain_mw(gs.antenna, None)
            elif d_gr == 0.0:
                g_gs = _gain_mw(gs.antenna, np.ones(N))
            else:
                cos_gs = (bx * vx + by * vy + bz * vz)
                cos_gs /= d_ug * -d_gr
                if any_coincident:
                    cos_gs[coincident] = 1.0
                g_gs = _gain_mw(gs.antenna, cos_gs)
            ground[k] = g_gs * float(dbm_to_mw(rg - float(pl_gr) - bel))
            if cl_gr or d_gr == 0.0:
                clamped |= True
            # UAV side.
            if uav.antenna.is_omni:
                g_uav = _gain_mw(uav.antenna, None)
            else:
                tr = geo.to_router[k][:, sl]
                d_ur = geo.d_router[k][sl]
                cos_uav = bx * tr[0] + by * tr[1] + bz * tr[2]
                cos_uav /= d_ug * d_ur
                bad = coincident | (d_ur == 0.0)
                if bad.any():
                    cos_uav[bad] = 1.0
                g_uav = _gain_mw(uav.antenna, cos_uav)
            air[k] = geo.air_mw[k][sl] * (g_uav * float(dbm_to_mw(rg - bel)))
        return {
            "s_up": uav.tx_power + boresight_gain - pl_ug,
            "s_dn": gs.tx_power + boresight_gain - pl_ug,
            "air": air,
            "ground": ground,
            "clamped": np.asarray(clamped, dtype=bool),
        }

    def sinr(self, uplink: int, downlink: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Flat (uplink, downlink, terrestrial[K]) SINR arrays in dB for a channel pair."""
        if uplink == downlink:
            raise ValueError("uplink and downlink channels must differ")
        t = self.terms
        p_uav = 10.0 ** (self.uav.tx_power / 10.0)
        p_gs = 10.0 ** (self.gs.tx_power / 10.0)
        i_up = np.full_like(t["s_up"], self.noise_gs_mw)
        i_dn = np.full_like(t["s_dn"], self.noise_uav_mw)
        terr = np.empty_like(t["air"])
        for k, r in enumerate(self.routers):
            p_r = 10.0 ** (r.tx_power / 10.0)
            w_up = _weight(channel_rejection(uplink, r.channel))
            w_dn = _weight(channel_rejection(downlink, r.channel))
            if w_up:
                i_up += (w_up * p_r) * t["ground"][k]
            if w_dn:
                i_dn += (w_dn * p_r) * t["air"][k]
            i_t = np.full_like(t["s_up"], self.noise_wlan_mw)
            w_tu = _weight(channel_rejection(r.channel, uplink))
            w_tg = _weight(channel_rejection(r.channel, downlink))
            if w_tu:
                i_t += (w_tu * p_uav) * t["air"][k]
            if w_tg:
                i_t += (w_tg * p_gs) * t["ground"][k]
            terr[k] = self.terrestrial_signal[k] - mw_to_dbm(i_t)
        return t["s_up"] - mw_to_dbm(i_up), t["s_dn"] - mw_to_dbm(i_dn), terr

    def _pair(self, uplink, downlink) -> tuple[int, int]:
        return (self.uav.uplink if uplink is None else int(uplink),
                self.uav.downlink if downlink is None else int(downlink))

    def pass_mask(self, uplink: int | None = None, downlink: int | None = None) -> np.ndarray:
        """Flat boolean pass mask; the cheap path used by exhaustive searches."""
        uplink, downlink = self._pair(uplink, downlink)
        up, dn, terr = self.sinr(uplink, downlink)
        th = self.scenario.thresholds
        passed = (up > th.uplink_min) & (dn > th.downlink_min)
        for row in terr:
            passed &= row > th.terrestrial_min
        return passed

    def evaluate(self, uplink: int | None = None, downlink: int | None = None) -> FlyableGrid:
        """Sharing conditions at every grid point for one (uplink, downlink) pair."""
        uplink, downlink = self._pair(uplink, downlink)
        up, dn, terr = self.sinr(uplink, downlink)
        th = self.scenario.thresholds
        passed = (up > th.uplink_min) & (dn > th.downlink_min)
        margins = [up - th.uplink_min, dn - th.downlink_min]
        if len(self.routers):
            passed &= np.all(terr > th.terrestrial_min, axis=0)
            margins.append(terr.min(axis=0) - th.terrestrial_min)
        stack = np.stack(margins)
        binding = np.argmin(stack, axis=0).astype(np.int8)  # first minimum = tie order
        worst = np.min(stack, axis=0)
        shape = self.grid.shape
        return FlyableGrid(
            spec=self.grid,
            passed=passed.reshape(shape),
            worst_margin=worst.reshape(shape),
            binding=binding.reshape(shape),
            uplink_sinr=up.reshape(shape),
            downlink_sinr=dn.reshape(shape),
            terrestrial_sinr=terr.reshape((len(self.routers),) + shape),
            clamped=self.terms["clamped"].reshape(shape),
            gs_position=self.gs.position,
            channels=(uplink, downlink),
        )


def _weight(rejection_db: float) -> float:
    return 0.0 if math.isinf(rejection_db) else 10.0 ** (-rejection_db / 10.0)


def _split(n: int, threads: int) -> list[slice]:
    threads = max(1, min(int(threads), n))
    bounds = np.linspace(0, n, threads + 1).astype(int)
    return [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:])]


def compute_flyable_grid(scenario: Scenario, gs_position: Position3D | None = None,
                         grid: GridSpec | None = None, *, uav_index: int = 0,
                         channels: tuple[int, int] | None = None,
                         threads: int = 1) -> FlyableGrid:
    """Flyable map for one UAV with the GS at `gs_position` (default: the scenario's GS)."""
    if gs_position is None:
        gs_position = scenario.gs.position
    if not scenario.bounds.contains_xy(gs_position.x, gs_position.y):
        raise ValueError(f"GS position ({gs_position.x}, {gs_position.y}) lies outside the area")
    if grid is None:
        grid = GridSpec(scenario.bounds, 10.0, scenario.uavs[uav_index].position.z)
    terms = LinkTerms(scenario, gs_position, grid, uav_index, threads)
    if channels is None:
        return terms.evaluate()
    return terms.evaluate(*channels)


__all__ = [
    "Condition", "EmptyRegionError", "FlyableGrid", "GridGeometry", "GridSpec", "LinkTerms",
    "compute_flyable_grid", "flyable_ratio_within", "point_in_polygon", "region_mask",
]
