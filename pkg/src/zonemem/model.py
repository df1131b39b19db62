"""Map data model: signatures, zones, portals and the zone-keyframe mapping.

A :class:`WorldMap` is immutable once built.  Every signature belongs to
exactly one zone; a zone's ``members`` tuple is its keyframe set, kept in
generator insertion order so runs are reproducible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterable, Mapping

from .errors import UnknownSignature, UnknownZone

SKELETON = "skeleton"
ROOM = "room"
LAYERS = (SKELETON, ROOM)
ZONE_KINDS = ("lobby", "corridor", "room", "cell")

DEFAULT_PORTAL_RADIUS = 1.0


def normalize_angle(theta: float) -> float:
    """Wrap ``theta`` into [-pi, pi)."""
    wrapped = math.fmod(theta + math.pi, 2.0 * math.pi)
    if wrapped < 0.0:
        wrapped += 2.0 * math.pi
    out = wrapped - math.pi
    # fmod rounding can land exactly on +pi
    return -math.pi if out >= math.pi else out


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta", normalize_angle(float(self.theta)))

    def distance(self, other: "Pose") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def to_list(self) -> list[float]:
        return [self.x, self.y, self.theta]

    @classmethod
    def from_list(cls, values: Iterable[float]) -> "Pose":
        x, y, theta = values
        return cls(float(x), float(y), float(theta))


@dataclass(frozen=True)
class Signature:
    id: int
    zone: str
    pose: Pose
    payload_bytes: int = 0
    weight: int = 0
    layer: str = SKELETON
    links: frozenset[int] = field(default_factory=frozenset)


@dataclass(frozen=True)
class Portal:
    from_zone: str
    to_zone: str
    position: Pose
    radius: float = DEFAULT_PORTAL_RADIUS

    def reversed(self) -> "Portal":
        return Portal(self.to_zone, self.from_zone, self.position, self.radius)


@dataclass(frozen=True)
class Zone:
    id: str
    name: str
    kind: str
    members: tuple[int, ...]
    portals: tuple[Portal, ...] = ()


@dataclass(frozen=True)
class Violation:
    """One broken map invariant: the rule name and the offending ids."""

    rule: str
    ids: tuple = ()

    def __str__(self) -> str:
        return f"{self.rule}{self.ids}"


@dataclass(frozen=True)
class WorldMap:
    zones: Mapping[str, Zone]
    signatures: Mapping[int, Signature]
    meta: Mapping[str, Any] = field(default_factory=dict)

    @cached_property
    def _zone_index(self) -> dict[int, str]:
        index: dict[int, str] = {}
        for zone in self.zones.values():
            for sid in zone.members:
                index.setdefault(sid, zone.id)
        return index

    def zone_of(self, sig: int) -> str:
        return zone_of(self, sig)

    def signatures_of(self, zone: str) -> tuple[int, ...]:
        return signatures_of(self, zone)

    def zone_size(self, zone: str) -> int:
        return len(signatures_of(self, zone))

    def centroid(self, zone: str) -> Pose:
        members = signatures_of(self, zone)
        xs = [self.signatures[s].pose.x for s in members]
        ys = [self.signatures[s].pose.y for s in members]
        return Pose(sum(xs) / len(xs), sum(ys) / len(ys))

    def portals_between(self, a: str, b: str) -> list[Portal]:
        if a not in self.zones:
            raise UnknownZone(a)
        return [p for p in self.zones[a].portals if p.to_zone == b]

    @property
    def all_portals(self) -> list[Portal]:
        return [p for z in self.zones.values() for p in z.portals]


def zone_of(world: WorldMap, sig: int) -> str:
    if sig not in world.signatures:
        raise UnknownSignature(sig)
    try:
        return world._zone_index[sig]
    except KeyError:
        raise UnknownSignature(sig) from None


def signatures_of(world: WorldMap, zone: str) -> tuple[int, ...]:
    try:
        return world.zones[zone].members
    except KeyError:
        raise UnknownZone(zone) from None


def validate(world: WorldMap) -> list[Violation]:
    """Check every map invariant; an empty list means the map is well formed."""
    out: list[Violation] = []
    sigs = world.signatures

    for key, sig in sigs.items():
        if key != sig.id:
            out.append(Violation("IdMismatch", (key, sig.id)))
        if not isinstance(sig.id, int) or sig.id < 1:
            out.append(Violation("BadSignatureId", (sig.id,)))
        if sig.payload_bytes < 0 or sig.weight < 0:
            out.append(Violation("NegativeCounter", (sig.id,)))
        if sig.layer not in LAYERS:
            out.append(Violation("UnknownLayer", (sig.id, sig.layer)))
        if not (-math.pi <= sig.pose.theta < math.pi):
            out.append(Violation("ThetaRange", (sig.id,)))

    owners: dict[int, list[str]] = {}
    for zid, zone in world.zones.items():
        if zid != zone.id:
            out.append(Violation("ZoneIdMismatch", (zid, zone.id)))
        if zone.kind not in ZONE_KINDS:
            out.append(Violation("UnknownZoneKind", (zid, zone.kind)))
        if not zone.members:
            out.append(Violation("EmptyZone", (zid,)))
        if len(set(zone.members)) != len(zone.members):
            out.append(Violation("DuplicateMember", (zid,)))
        for sid in dict.fromkeys(zone.members):
            if sid not in sigs:
                out.append(Violation("UnknownMember", (zid, sid)))
                continue
            owners.setdefault(sid, []).append(zid)

    for sid, sig in sigs.items():
        zones = owners.get(sid, [])
        if len(zones) > 1:
            out.append(Violation("PartitionViolation", (sid,)))
        elif not zones:
            out.append(Violation("Uncovered", (sid,)))
        if zones and sig.zone not in zones:
            out.append(Violation("ZoneMismatch", (sid, sig.zone)))
        elif sig.zone not in world.zones:
            out.append(Violation("UnknownZone", (sid, sig.zone)))

    for sid in sorted(sigs):
        for other in sorted(sigs[sid].links):
            if other == sid:
                out.append(Violation("SelfLink", (sid,)))
            elif other not in sigs:
                out.append(Violation("UnknownLink", (sid, other)))
            elif sid not in sigs[other].links:
                out.append(Violation("AsymmetricLink", (sid, other)))

    for zid, zone in world.zones.items():
        for p in zone.portals:
            key = (p.from_zone, p.to_zone)
            if p.from_zone != zid:
                out.append(Violation("PortalOwner", (zid,) + key))
            if p.from_zone == p.to_zone:
                out.append(Violation("PortalSelf", key))
                continue
            if p.to_zone not in world.zones:
                out.append(Violation("PortalUnknownZone", key))
                continue
            if p.radius <= 0:
                out.append(Violation("PortalRadius", key))
            if p.reversed() not in world.zones[p.to_zone].portals:
                out.append(Violation("AsymmetricPortal", key))
    return out


# --- serialization -------------------------------------------------------


def to_dict(world: WorldMap) -> dict[str, Any]:
    return {
        "meta": dict(world.meta),
        "zones": [
            {
                "id": z.id,
                "name": z.name,
                "kind": z.kind,
                "members": list(z.members),
                "portals": [
                    {
                        "from_zone": p.from_zone,
                        "to_zone": p.to_zone,
                        "position": p.position.to_list(),
                        "radius": p.radius,
                    }
                    for p in z.portals
                ],
            }
            for z in world.zones.values()
        ],
        "signatures": [
            {
                "id": s.id,
                "zone": s.zone,
                "pose": s.pose.to_list(),
                "payload_bytes": s.payload_bytes,
                "weight": s.weight,
                "layer": s.layer,
                "links": sorted(s.links),
            }
            for s in world.signatures.values()
        ],
    }


def from_dict(data: Mapping[str, Any]) -> WorldMap:
    zones = {}
    for z in data["zones"]:
        portals = tuple(
            Portal(p["from_zone"], p["to_zone"], Pose.from_list(p["position"]), float(p["radius"]))
            for p in z.get("portals", [])
        )
        zones[z["id"]] = Zone(z["id"], z["name"], z["kind"], tuple(int(m) for m in z["members"]), portals)
    signatures = {}
    for s in data["signatures"]:
        signatures[int(s["id"])] = Signature(
            id=int(s["id"]),
            zone=s["zone"],
            pose=Pose.from_list(s["pose"]),
            payload_bytes=int(s["payload_bytes"]),
            weight=int(s["weight"]),
            layer=s["layer"],
            links=frozenset(int(x) for x in s["links"]),
        )
    return WorldMap(zones=zones, signatures=signatures, meta=dict(data.get("meta", {})))


def dumps(world: WorldMap) -> str:
    return json.dumps(to_dict(world), ensure_ascii=False, separators=(",", ":"))


def loads(text: str) -> WorldMap:
    return from_dict(json.loads(text))


def save(world: WorldMap, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(world))


def load(path) -> WorldMap:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
