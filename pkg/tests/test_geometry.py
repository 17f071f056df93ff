import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uavshare.geometry import (
    AreaBounds,
    GeometryError,
    Position3D,
    angle_between,
    distance,
    off_boresight_angle,
)

coord = st.floats(-2000, 2000, allow_nan=False)
height = st.floats(0, 500, allow_nan=False)
points = st.builds(Position3D, coord, coord, height)


def P(x, y, z=0.0):
    return Position3D(x, y, z)


@pytest.mark.parametrize("a, b, expected", [
    (P(0, 0, 0), P(0, 0, 30), 30.0),
    (P(0, 0, 0), P(3, 4, 0), 5.0),
    (P(0, 0, 2), P(1000, 1000, 30), 1414.49),
])
def test_distance_examples(a, b, expected):
    assert distance(a, b) == pytest.approx(expected, abs=0.005)


@pytest.mark.parametrize("ant, target, other, expected", [
    (P(0, 0, 0), P(0, 0, 30), P(0, 0, 60), 0.0),
    (P(0, 0, 0), P(0, 0, 30), P(100, 0, 0), 90.0),
    (P(0, 0, 0), P(100, 0, 30), P(100, 0, 0), 16.70),
])
def test_off_boresight_examples(ant, target, other, expected):
    assert off_boresight_angle(ant, target, other) == pytest.approx(expected, abs=0.005)


def test_degenerate_direction_rejected():
    with pytest.raises(GeometryError):
        off_boresight_angle(P(1, 1, 1), P(1, 1, 1), P(0, 0, 0))
    with pytest.raises(GeometryError):
        off_boresight_angle(P(1, 1, 1), P(0, 0, 0), P(1, 1, 1))


@pytest.mark.parametrize("args", [(math.nan, 0, 0), (0, math.inf, 0), (0, 0, -1)])
def test_position_invariants(args):
    with pytest.raises(GeometryError):
        Position3D(*args)


@pytest.mark.parametrize("args", [(0, 0, 0, 1), (1, 0, 0, 1), (0, 1, 1, 1)])
def test_bounds_invariants(args):
    with pytest.raises(GeometryError):
        AreaBounds(*args)


def test_bounds_helpers():
    b = AreaBounds(0, 1000, 0, 500)
    assert b.area == 500_000 and b.center == (500, 250)
    assert b.contains_xy(1000, 500) and not b.contains_xy(1000.1, 0)


@given(points, points, points)
def test_distance_symmetry_and_triangle(a, b, c):
    assert distance(a, b) == distance(b, a) >= 0
    assert distance(a, c) <= distance(a, b) + distance(b, c) + 1e-9


@given(points, points)
def test_angle_to_target_is_zero(a, t):
    if distance(a, t) < 1e-3:
        return
    assert off_boresight_angle(a, t, t) == 0.0


@given(points, points, points, st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi),
       st.floats(0, 2 * math.pi), coord, coord, height)
def test_angle_invariant_under_rigid_motion(a, t, o, yaw, pitch, roll, dx, dy, dz):
    if distance(a, t) < 1.0 or distance(a, o) < 1.0:
        return

    def rot(axis, ang):
        c, s = math.cos(ang), math.sin(ang)
        m = np.eye(3)
        i, j = [k for k in range(3) if k != axis]
        m[i, i], m[i, j], m[j, i], m[j, j] = c, -s, s, c
        return m

    R = rot(2, yaw) @ rot(1, pitch) @ rot(0, roll)
    shift = np.array([dx, dy, dz])
    u = R @ (t.as_array() - a.as_array())
    v = R @ (o.as_array() - a.as_array())
    before = off_boresight_angle(a, t, o)
    # Rotations can push points below ground, so compare via the vector helper.
    after, degenerate = angle_between(u[None, :], v[None, :])
    assert not degenerate.any()
    if 1e-3 < before < 180 - 1e-3:  # acos in the vector helper is ill-conditioned at the ends
        assert float(after[0]) == pytest.approx(before, abs=1e-9)
    moved = [Position3D(*(p.as_array() + np.abs(shift))) for p in (a, t, o)]
    assert off_boresight_angle(*moved) == pytest.approx(before, abs=1e-9)
    # A yaw about the vertical keeps heights, so real positions can be used.
    turned = [Position3D(*(rot(2, yaw) @ p.as_array())) for p in (a, t, o)]
    assert off_boresight_angle(*turned) == pytest.approx(before, abs=1e-9)
