import math
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from zonemem import model
from zonemem.errors import UnknownSignature, UnknownZone
from zonemem.model import Pose, Violation, WorldMap, normalize_angle, signatures_of, validate, zone_of
from zonemem.worldgen import generate_with_manifest, hospital_spec

from conftest import line_world
from strategies import world_specs


def test_zone_of_corridor_signature(hospital):
    c2 = signatures_of(hospital, "C2")
    assert zone_of(hospital, c2[7]) == "C2"


def test_zone_of_single_zone():
    w = line_world(5)
    assert {zone_of(w, s) for s in range(1, 6)} == {"Z1"}


def test_zone_of_matches_generator_manifest():
    world, manifest = generate_with_manifest(hospital_spec(seed=7))
    for placement in manifest:
        assert zone_of(world, placement.sig) == placement.zone


def test_zone_of_unknown():
    with pytest.raises(UnknownSignature):
        zone_of(line_world(3), 99)


def test_signatures_of_echo():
    w = line_world(5, [2, 3])
    assert signatures_of(w, "Z2") == (3, 4, 5)


def test_signatures_of_union_is_everything(hospital):
    union = set()
    for z in hospital.zones:
        union |= set(signatures_of(hospital, z))
    assert union == set(hospital.signatures)


def test_signatures_of_r13_against_manifest():
    world, manifest = generate_with_manifest(hospital_spec())
    expected = [p.sig for p in manifest if p.zone == "R13"]
    assert list(signatures_of(world, "R13")) == expected
    assert len(expected) == 12


def test_signatures_of_unknown():
    with pytest.raises(UnknownZone):
        signatures_of(line_world(3), "nope")


def test_validate_generated(hospital):
    assert validate(hospital) == []


def test_validate_partition_violation():
    w = line_world(10, [5, 5])
    z2 = w.zones["Z2"]
    zones = dict(w.zones)
    zones["Z2"] = replace(z2, members=z2.members + (4,))
    bad = WorldMap(zones, w.signatures, w.meta)
    assert validate(bad) == [Violation("PartitionViolation", (4,))]


def test_validate_asymmetric_link():
    w = line_world(6)
    sigs = dict(w.signatures)
    sigs[3] = replace(sigs[3], links=sigs[3].links | {5})
    assert validate(WorldMap(w.zones, sigs, w.meta)) == [Violation("AsymmetricLink", (3, 5))]


def test_validate_other_rules():
    w = line_world(4, [2, 2])
    sigs = dict(w.signatures)
    sigs[1] = replace(sigs[1], links=sigs[1].links | {77})
    zones = dict(w.zones)
    zones["Z3"] = model.Zone("Z3", "Z3", "room", ())
    rules = {v.rule for v in validate(WorldMap(zones, sigs, w.meta))}
    assert {"UnknownLink", "EmptyZone"} <= rules


def test_validate_asymmetric_portal():
    w = line_world(4, [2, 2])
    zones = dict(w.zones)
    zones["Z2"] = replace(zones["Z2"], portals=())
    assert [v.rule for v in validate(WorldMap(zones, w.signatures, w.meta))] == ["AsymmetricPortal"]


@pytest.mark.parametrize(
    "theta, expected",
    [(0.0, 0.0), (math.pi, -math.pi), (-math.pi, -math.pi), (3 * math.pi / 2, -math.pi / 2), (2 * math.pi, 0.0)],
)
def test_normalize_angle(theta, expected):
    assert normalize_angle(theta) == pytest.approx(expected, abs=1e-12)


@given(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False))
def test_pose_theta_half_open(theta):
    assert -math.pi <= Pose(0, 0, theta).theta < math.pi


def test_roundtrip(hospital):
    again = model.loads(model.dumps(hospital))
    assert again == hospital
    assert model.dumps(again) == model.dumps(hospital)


def test_file_format_keys(hospital, tmp_path):
    import json

    path = tmp_path / "w.json"
    model.save(hospital, path)
    data = json.loads(path.read_text(encoding="utf-8"))
    assert set(data) == {"meta", "zones", "signatures"}
    assert all(isinstance(m, int) for m in data["zones"][0]["members"])
    assert len(data["signatures"][0]["pose"]) == 3
    assert set(data["signatures"][0]) == {"id", "zone", "pose", "payload_bytes", "weight", "layer", "links"}


@settings(max_examples=40, deadline=None)
@given(world_specs())
def test_partition_and_mutual_consistency(spec):
    from zonemem.worldgen import generate

    world = generate(spec)
    assert validate(world) == []
    seen = set()
    for z in world.zones:
        members = set(signatures_of(world, z))
        assert not members & seen
        seen |= members
        for s in members:
            assert zone_of(world, s) == z
    assert seen == set(world.signatures)
    assert model.loads(model.dumps(world)) == world
