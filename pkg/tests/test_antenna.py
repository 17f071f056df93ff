import pytest
from hypothesis import given
from hypothesis import strategies as st

from uavshare.antenna import AntennaPattern, eirp, gain, gain_array

GS = AntennaPattern.directional(25.0, 4.0, 25.0)
UAV = AntennaPattern.directional(15.0, 36.0, 25.0)
OMNI = AntennaPattern.omni(0.0)

patterns = st.builds(AntennaPattern.directional, st.floats(-10, 40), st.floats(0.5, 180),
                     st.floats(0.1, 60))
angles = st.floats(0, 180)


@pytest.mark.parametrize("pattern, theta, expected", [
    (GS, 0.0, 25.0), (GS, 2.0, 22.0), (GS, 90.0, 0.0), (OMNI, 0.0, 0.0), (OMNI, 137.0, 0.0),
    (UAV, 90.0, -10.0),
])
def test_gain_examples(pattern, theta, expected):
    assert gain(pattern, theta) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("pattern, tx, expected", [(GS, 11, 36), (UAV, 0, 15), (OMNI, 36, 36)])
def test_eirp_examples(pattern, tx, expected):
    assert eirp(pattern, tx) == expected


@pytest.mark.parametrize("theta", [-0.1, 180.1])
def test_angle_out_of_range(theta):
    with pytest.raises(ValueError):
        gain(GS, theta)


@pytest.mark.parametrize("kwargs", [
    dict(peak_gain=10, beamwidth_3db=0, sidelobe_floor=20),
    dict(peak_gain=10, beamwidth_3db=181, sidelobe_floor=20),
    dict(peak_gain=10, beamwidth_3db=30, sidelobe_floor=0),
])
def test_directional_invariants(kwargs):
    with pytest.raises(ValueError):
        AntennaPattern.directional(**kwargs)


@given(patterns, angles, angles)
def test_gain_non_increasing(p, a, b):
    lo, hi = sorted((a, b))
    assert gain(p, hi) <= gain(p, lo)


@given(patterns, angles)
def test_gain_bounded(p, theta):
    assert p.peak_gain - p.sidelobe_floor <= gain(p, theta) <= p.peak_gain


@given(patterns)
def test_half_beamwidth_is_three_db_down(p):
    if p.sidelobe_floor >= 3.0:
        assert gain(p, p.beamwidth_3db / 2) == pytest.approx(p.peak_gain - 3.0, abs=1e-9)


@given(st.floats(-10, 30), angles)
def test_omni_constant(peak, theta):
    assert gain(AntennaPattern.omni(peak), theta) == peak


def test_gain_array_matches_scalar():
    import numpy as np

    theta = np.linspace(0, 180, 721)
    for p in (GS, UAV, OMNI):
        assert np.allclose(gain_array(p, theta), [gain(p, t) for t in theta], atol=1e-12, rtol=0)
