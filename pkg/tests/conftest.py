from __future__ import annotations

import pytest

from zonemem.ltm import LtmStore
from zonemem.model import Pose, Portal, Signature, WorldMap, Zone
from zonemem.worldgen import scenario_world, scenario_world_small


def line_world(n: int, zone_sizes=None, spacing: float = 1.0, payload: int = 0) -> WorldMap:
    """``n`` signatures on the x axis, chain-linked, split into consecutive zones.

    Portals sit halfway between the last keyframe of one zone and the first
    of the next.
    """
    zone_sizes = list(zone_sizes or [n])
    assert sum(zone_sizes) == n
    sigs, zones = {}, {}
    sid = 1
    names = [f"Z{i + 1}" for i in range(len(zone_sizes))]
    bounds = []
    for name, size in zip(names, zone_sizes):
        members = []
        for _ in range(size):
            links = {s for s in (sid - 1, sid + 1) if 1 <= s <= n}
            sigs[sid] = Signature(sid, name, Pose((sid - 1) * spacing, 0.0), payload, 0, "skeleton", frozenset(links))
            members.append(sid)
            sid += 1
        bounds.append(members)
        zones[name] = members
    portals = {name: [] for name in names}
    for i in range(len(names) - 1):
        a, b = names[i], names[i + 1]
        x = (sigs[bounds[i][-1]].pose.x + sigs[bounds[i + 1][0]].pose.x) / 2.0
        p = Portal(a, b, Pose(x, 0.0), 1.0)
        portals[a].append(p)
        portals[b].append(p.reversed())
    return WorldMap(
        zones={z: Zone(z, z, "corridor", tuple(m), tuple(portals[z])) for z, m in zones.items()},
        signatures=sigs,
        meta={"name": "line", "seed": 0},
    )


@pytest.fixture(scope="session")
def hospital():
    return scenario_world()


@pytest.fixture(scope="session")
def hospital_small():
    return scenario_world_small()


@pytest.fixture(scope="session")
def hospital_store(hospital, tmp_path_factory):
    store = LtmStore.build(hospital, tmp_path_factory.mktemp("ltm") / "hospital.zmlt")
    yield store
    store.close()


@pytest.fixture(scope="session")
def hospital_small_store(hospital_small, tmp_path_factory):
    store = LtmStore.build(hospital_small, tmp_path_factory.mktemp("ltm") / "small.zmlt")
    yield store
    store.close()


@pytest.fixture
def store_for(tmp_path):
    opened = []

    def build(world):
        s = LtmStore.build(world, tmp_path / f"w{len(opened)}.zmlt")
        opened.append(s)
        return s

    yield build
    for s in opened:
        s.close()


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("[")[1].split("]")[0])):
            terminalreporter.write_line(line)
