import pytest
from hypothesis import settings

from uavshare.antenna import AntennaPattern
from uavshare.geometry import Position3D
from uavshare.link import RadioNode, Role
from uavshare.scenario import bundled_path, load_scenario

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

_CRITERIA: list[str] = []


def record_criterion(number, name: str, passed: bool, detail: str = "") -> None:
    line = f"criterion {number} {'PASS' if passed else 'FAIL'}: {name}"
    if detail:
        line += f" ({detail})"
    _CRITERIA.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)


def make_router(x, y, channel, tx=20.0, z=1.5, rid="r"):
    return RadioNode(rid, Role.ROUTER, Position3D(x, y, z), tx, AntennaPattern.omni(0.0),
                     channel=channel)


@pytest.fixture(scope="session")
def table1():
    return load_scenario(bundled_path("paper_table1.json"))


def scalar_sinr(scenario, gs_position, x, y, z, channels=None, uav_index=0):
    """Independent per-point recomputation through the scalar link functions."""
    from uavshare.link import compute_link_sinr

    pair = channels or (None, None)
    uav, gs = scenario.link_nodes(uav_index, *pair)
    uav = uav.moved(Position3D(float(x), float(y), float(z)))
    gs = gs.moved(gs_position)
    return compute_link_sinr(uav, gs, list(scenario.routers), scenario.models)
