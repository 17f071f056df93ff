import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uavshare.coverage import (
    EmptyRegionError,
    GridSpec,
    compute_flyable_grid,
    flyable_ratio_within,
    point_in_polygon,
)
from uavshare.geometry import AreaBounds, Position3D
from uavshare.link import SharingThresholds, evaluate_conditions
from uavshare.propagation import CloseRangeWarning
from uavshare.scenario import Mode

from conftest import make_router, scalar_sinr

KM = AreaBounds(0, 1000, 0, 1000)


def test_grid_counts_and_centres():
    g = GridSpec(KM, 10, 30)
    assert g.shape == (100, 100) and g.size == 10_000
    assert g.xs[0] == 5 and g.xs[-1] == 995
    odd = GridSpec(AreaBounds(0, 25, 0, 10), 10, 30)
    assert odd.shape == (1, 3)
    assert odd.xs.tolist() == [5, 15, 22.5]


@pytest.mark.parametrize("res, alt", [(0, 30), (-1, 30), (10, 0), (10, -5)])
def test_grid_invariants(res, alt):
    with pytest.raises(ValueError):
        GridSpec(KM, res, alt)


def test_zero_routers_fully_flyable(table1):
    fg = compute_flyable_grid(table1)
    assert fg.flyable_ratio == 1.0
    gs = table1.gs.position
    for x, y in ((5, 5), (995, 5), (995, 995), (5, 995)):
        s = scalar_sinr(table1, gs, x, y, 30)
        assert evaluate_conditions(s, table1.thresholds).passed
        assert s.uplink_sinr > 11
        iy, ix = int(y // 10), int(x // 10)
        assert fg.uplink_sinr[iy, ix] == pytest.approx(s.uplink_sinr, abs=1e-9)


def test_worst_corner_budget(table1):
    # GS in one corner, UAV over the opposite one: S = -70.6 dBm, SNR about 27 dB.
    s = scalar_sinr(table1, Position3D(0, 0, 2), 1000, 1000, 30)
    assert s.uplink_sinr == pytest.approx(-70.58 + 98.0, abs=0.01)
    assert compute_flyable_grid(table1, Position3D(0, 0, 2)).flyable_ratio == 1.0


def _routers_scenario(table1):
    rs = [make_router(200, 700, 0, rid="a"), make_router(650, 250, 0, rid="b"),
          make_router(820, 840, 1, rid="c"), make_router(300, 150, 2, rid="d")]
    return table1.with_routers(rs)


def test_grid_matches_scalar_oracle(table1):
    for mode in Mode:
        s = _routers_scenario(table1).with_mode(mode)
        gs = Position3D(430, 560, 2)
        grid = GridSpec(KM, 50, 30)
        fg = compute_flyable_grid(s, gs, grid)
        for iy, y in enumerate(grid.ys):
            for ix, x in enumerate(grid.xs):
                ref = scalar_sinr(s, gs, x, y, 30)
                assert fg.uplink_sinr[iy, ix] == pytest.approx(ref.uplink_sinr, abs=1e-9)
                assert fg.downlink_sinr[iy, ix] == pytest.approx(ref.downlink_sinr, abs=1e-9)
                assert fg.terrestrial_sinr[:, iy, ix] == pytest.approx(ref.terrestrial_sinr, abs=1e-9)
                res = evaluate_conditions(ref, s.thresholds)
                assert bool(fg.passed[iy, ix]) is res.passed
                assert fg.binding[iy, ix] == res.binding
                assert fg.worst_margin[iy, ix] == pytest.approx(res.worst_margin, abs=1e-9)


def test_ratio_definition(table1):
    fg = compute_flyable_grid(_routers_scenario(table1).with_mode(Mode.CONVENTIONAL))
    assert fg.flyable_ratio == np.count_nonzero(fg.passed) / fg.passed.size
    assert 0 < fg.flyable_ratio < 1


def test_region_ratios(table1):
    fg = compute_flyable_grid(_routers_scenario(table1).with_mode(Mode.CONVENTIONAL))
    full = [(0, 0), (1000, 0), (1000, 1000), (0, 1000)]
    assert flyable_ratio_within(fg, full) == fg.flyable_ratio
    west = [(0, 0), (500, 0), (500, 1000), (0, 1000)]
    # Brute-force scan of the cell centres.
    hits = total = 0
    for iy, y in enumerate(fg.spec.ys):
        for ix, x in enumerate(fg.spec.xs):
            if x < 500:
                total += 1
                hits += bool(fg.passed[iy, ix])
    assert flyable_ratio_within(fg, west) == hits / total
    # A region holding only passing points.
    iy, ix = np.argwhere(fg.passed)[0]
    x, y = fg.spec.xs[ix], fg.spec.ys[iy]
    square = [(x - 1, y - 1), (x + 1, y - 1), (x + 1, y + 1), (x - 1, y + 1)]
    assert flyable_ratio_within(fg, square) == 1.0
    with pytest.raises(EmptyRegionError):
        flyable_ratio_within(fg, [(2000, 2000), (2001, 2000), (2001, 2001)])


def test_point_in_polygon_triangle():
    tri = [(0, 0), (10, 0), (0, 10)]
    assert point_in_polygon(np.array([1, 9, 6]), np.array([1, 0.5, 6]), tri).tolist() == [True, True, False]


def test_gs_outside_area_rejected(table1):
    with pytest.raises(ValueError):
        compute_flyable_grid(table1, Position3D(1500, 500, 2))


def test_coincident_point_is_clamped_and_flagged(table1):
    # GS placed exactly at a cell centre at the grid altitude.
    grid = GridSpec(KM, 10, 2.0)
    fg = compute_flyable_grid(_routers_scenario(table1), Position3D(505, 505, 2), grid)
    assert fg.clamped[50, 50]
    assert np.isfinite(fg.uplink_sinr[50, 50])
    assert fg.clamped.sum() < 20


def test_scalar_close_range_warns(table1):
    with pytest.warns(CloseRangeWarning):
        scalar_sinr(table1, Position3D(500, 500, 29.5), 500, 500, 30)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        compute_flyable_grid(table1, Position3D(500, 500, 2), GridSpec(KM, 100, 2.5))


@given(st.floats(0, 10), st.floats(0, 10), st.floats(0, 10), st.floats(0, 10))
def test_raising_thresholds_never_increases_ratio(table1, up, dn, tr, bump):
    s = _routers_scenario(table1).with_mode(Mode.CONVENTIONAL)
    grid = GridSpec(KM, 50, 30)
    low = s.with_thresholds(SharingThresholds(up, dn, tr))
    high = s.with_thresholds(SharingThresholds(up + bump, dn + bump, tr + bump))
    assert compute_flyable_grid(high, grid=grid).flyable_ratio <= \
        compute_flyable_grid(low, grid=grid).flyable_ratio


@given(st.integers(0, 3), st.sampled_from(list(Mode)))
def test_removing_router_never_decreases_ratio(table1, drop, mode):
    s = _routers_scenario(table1).with_mode(mode)
    grid = GridSpec(KM, 25, 30)
    fewer = s.with_routers([r for i, r in enumerate(s.routers) if i != drop])
    a = compute_flyable_grid(s, grid=grid)
    b = compute_flyable_grid(fewer, grid=grid)
    assert b.flyable_ratio >= a.flyable_ratio
    assert np.all(b.passed[a.passed])


@pytest.mark.parametrize("threads", [2, 3, 7])
def test_parallel_evaluation_identical(table1, threads):
    s = _routers_scenario(table1).with_mode(Mode.CONVENTIONAL)
    a = compute_flyable_grid(s, threads=1)
    b = compute_flyable_grid(s, threads=threads)
    for name in ("passed", "worst_margin", "binding", "uplink_sinr", "downlink_sinr",
                 "terrestrial_sinr"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
