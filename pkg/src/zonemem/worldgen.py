"""Deterministic synthetic hospital worlds.

Layout rules
------------
* The lobby is a square grid of signatures (1 m spacing) centred on the origin.
* Corridors form a chain starting at the lobby's east edge.  Each corridor
  turns 90 degrees left from the previous one, so four corridors trace a
  rectangle.  With ``loop_closed`` the last corridor also connects back to
  the lobby.
* Rooms hang off a corridor at ``door_position_m``.  A room is a 3-wide grid
  of signatures set back from the corridor axis; its door signature links to
  the nearest corridor signature.  The door portal sits ``DOOR_OFFSET`` m off
  the corridor axis, so driving along the corridor never triggers it.

Skeleton signatures (lobby, corridors) are created before any room
signature, so skeleton ids are always smaller than room ids.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import asdict, dataclass, field
from typing import Any, Mapping

from .errors import SpecInvalid
from .ltm import payload_checksum
from .model import (
    DEFAULT_PORTAL_RADIUS,
    ROOM,
    SKELETON,
    Portal,
    Pose,
    Signature,
    WorldMap,
    Zone,
)

DOOR_OFFSET = 1.5
ROOM_SETBACK = 2.5
ROOM_COLUMNS = 3
PAYLOAD_RANGE = (20 * 1024, 60 * 1024)


@dataclass
class LobbySpec:
    name: str
    signature_count: int


@dataclass
class CorridorSpec:
    name: str
    length_m: float
    signatures_per_meter: float = 1.0

    @property
    def signature_count(self) -> int:
        return int(round(self.length_m * self.signatures_per_meter))


@dataclass
class RoomSpec:
    name: str
    attached_corridor: str
    door_position_m: float
    signature_count: int
    side: int = 1  # +1 left of the corridor heading, -1 right


@dataclass
class WorldSpec:
    seed: int
    lobby: LobbySpec
    corridors: list[CorridorSpec]
    rooms: list[RoomSpec] = field(default_factory=list)
    portal_radius: float = DEFAULT_PORTAL_RADIUS
    zoning: str = "semantic"
    cell_m: float | None = None
    loop_closed: bool = False
    name: str = "world"

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "WorldSpec":
        zoning = data.get("zoning", "semantic")
        cell_m = data.get("cell_m")
        if isinstance(zoning, Mapping):  # {"grid": 10.0}
            (zoning, cell_m), = zoning.items()
        return cls(
            seed=int(data.get("seed", 42)),
            lobby=LobbySpec(**data["lobby"]),
            corridors=[CorridorSpec(**c) for c in data.get("corridors", [])],
            rooms=[RoomSpec(**r) for r in data.get("rooms", [])],
            portal_radius=float(data.get("portal_radius", DEFAULT_PORTAL_RADIUS)),
            zoning=zoning,
            cell_m=None if cell_m is None else float(cell_m),
            loop_closed=bool(data.get("loop_closed", False)),
            name=data.get("name", "world"),
        )

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def check(self) -> None:
        names = [self.lobby.name] + [c.name for c in self.corridors] + [r.name for r in self.rooms]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise SpecInvalid("names unique", ", ".join(dupes))
        if self.lobby.signature_count < 1:
            raise SpecInvalid("signature counts >= 1", self.lobby.name)
        corridors = {c.name: c for c in self.corridors}
        for c in self.corridors:
            if c.length_m <= 0 or c.signatures_per_meter <= 0 or c.signature_count < 1:
                raise SpecInvalid("signature counts >= 1", c.name)
        for r in self.rooms:
            if r.signature_count < 1:
                raise SpecInvalid("signature counts >= 1", r.name)
            if r.attached_corridor not in corridors:
                raise SpecInvalid("room attaches to a corridor", f"{r.name} -> {r.attached_corridor}")
            if not 0.0 <= r.door_position_m <= corridors[r.attached_corridor].length_m:
                raise SpecInvalid("door positions within corridor length", r.name)
            if r.side not in (1, -1):
                raise SpecInvalid("room side is +1 or -1", r.name)
        if self.portal_radius <= 0:
            raise SpecInvalid("portal radius > 0")
        if self.zoning not in ("semantic", "grid"):
            raise SpecInvalid("zoning is semantic or grid", str(self.zoning))
        if self.zoning == "grid" and (self.cell_m is None or self.cell_m <= 0):
            raise SpecInvalid("grid zoning needs cell_m > 0")


@dataclass
class Placement:
    sig: int
    zone: str
    layer: str
    payload_bytes: int
    payload_sha256: str


class _Builder:
    def __init__(self, spec: WorldSpec):
        self.spec = spec
        self.rng = random.Random(spec.seed)
        self.poses: dict[int, Pose] = {}
        self.zone_of: dict[int, str] = {}
        self.layer: dict[int, str] = {}
        self.payload: dict[int, int] = {}
        self.links: dict[int, set[int]] = {}
        self.zones: dict[str, tuple[str, list[int]]] = {}
        self.portals: list[Portal] = []
        self.next_id = 1

    def add_zone(self, name: str, kind: str) -> None:
        self.zones[name] = (kind, [])

    def add_sig(self, zone: str, x: float, y: float, theta: float, layer: str) -> int:
        sid = self.next_id
        self.next_id += 1
        self.poses[sid] = Pose(x, y, theta)
        self.zone_of[sid] = zone
        self.layer[sid] = layer
        self.payload[sid] = self.rng.randint(*PAYLOAD_RANGE)
        self.links[sid] = set()
        self.zones[zone][1].append(sid)
        return sid

    def link(self, a: int, b: int) -> None:
        if a != b:
            self.links[a].add(b)
            self.links[b].add(a)

    def nearest(self, candidates, x: float, y: float) -> int:
        return min(candidates, key=lambda s: (math.hypot(self.poses[s].x - x, self.poses[s].y - y), s))

    def portal(self, a: str, b: str, x: float, y: float) -> None:
        self.portals.append(Portal(a, b, Pose(x, y), self.spec.portal_radius))


def _build_semantic(spec: WorldSpec) -> _Builder:
    b = _Builder(spec)

    # skeleton layer: lobby
    lobby = spec.lobby
    side = math.ceil(math.sqrt(lobby.signature_count))
    half = (side - 1) / 2.0
    b.add_zone(lobby.name, "lobby")
    cells: dict[tuple[int, int], int] = {}
    for k in range(lobby.signature_count):
        row, col = divmod(k, side)
        cells[(col, row)] = b.add_sig(lobby.name, col - half, row - half, 0.0, SKELETON)
    for (col, row), sid in cells.items():
        for nb in ((col + 1, row), (col, row + 1)):
            if nb in cells:
                b.link(sid, cells[nb])
    lobby_ids = list(cells.values())

    # skeleton layer: corridors
    start = (half + 0.5, 0.0)
    geometry: dict[str, tuple[tuple[float, float], float, list[int]]] = {}
    prev: str | None = None
    for i, cor in enumerate(spec.corridors):
        heading = (i % 4) * math.pi / 2.0
        dx, dy = round(math.cos(heading)), round(math.sin(heading))
        n = cor.signature_count
        step = cor.length_m / n
        b.add_zone(cor.name, "corridor")
        ids = []
        for k in range(n):
            t = (k + 0.5) * step
            ids.append(b.add_sig(cor.name, start[0] + dx * t, start[1] + dy * t, heading, SKELETON))
        for a, c in zip(ids, ids[1:]):
            b.link(a, c)
        if prev is None:
            b.link(ids[0], b.nearest(lobby_ids, *start))
            b.portal(lobby.name, cor.name, *start)
        else:
            b.link(geometry[prev][2][-1], ids[0])
            b.portal(prev, cor.name, *start)
        geometry[cor.name] = (start, heading, ids)
        start = (start[0] + dx * cor.length_m, start[1] + dy * cor.length_m)
        prev = cor.name
    if spec.loop_closed and len(spec.corridors) >= 2:
        last = spec.corridors[-1].name
        b.link(geometry[last][2][-1], b.nearest(lobby_ids, *start))
        b.portal(last, lobby.name, *start)

    # room layer
    for room in spec.rooms:
        (sx, sy), heading, cor_ids = geometry[room.attached_corridor]
        dx, dy = round(math.cos(heading)), round(math.sin(heading))
        nx, ny = -dy * room.side, dx * room.side
        door_x = sx + dx * room.door_position_m
        door_y = sy + dy * room.door_position_m
        b.add_zone(room.name, "room")
        theta = math.atan2(ny, nx)
        grid: dict[tuple[int, int], int] = {}
        for k in range(room.signature_count):
            depth, col = divmod(k, ROOM_COLUMNS)
            along = (0, -1, 1)[col]
            off = ROOM_SETBACK + depth
            grid[(along, depth)] = b.add_sig(
                room.name, door_x + dx * along + nx * off, door_y + dy * along + ny * off, theta, ROOM
            )
        for (along, depth), sid in grid.items():
            for nb in ((along + 1, depth), (along, depth + 1)):
                if nb in grid:
                    b.link(sid, grid[nb])
        door_sig = grid[(0, 0)]
        b.link(door_sig, b.nearest(cor_ids, door_x, door_y))
        b.portal(room.attached_corridor, room.name, door_x + nx * DOOR_OFFSET, door_y + ny * DOOR_OFFSET)
    return b


def _rezone_grid(b: _Builder, cell_m: float) -> None:
    """Replace semantic zones with square cells; portals go on cross-cell links."""
    b.zones = {}
    for sid in sorted(b.poses):
        p = b.poses[sid]
        name = f"G{math.floor(p.x / cell_m)}_{math.floor(p.y / cell_m)}"
        if name not in b.zones:
            b.add_zone(name, "cell")
        b.zones[name][1].append(sid)
        b.zone_of[sid] = name
    b.portals = []
    for a in sorted(b.links):
        for c in sorted(b.links[a]):
            za, zc = b.zone_of[a], b.zone_of[c]
            if a < c and za != zc:
                pa, pc = b.poses[a], b.poses[c]
                b.portal(za, zc, (pa.x + pc.x) / 2.0, (pa.y + pc.y) / 2.0)


def _finish(b: _Builder) -> WorldMap:
    spec = b.spec
    portals: dict[str, list[Portal]] = {z: [] for z in b.zones}
    for p in b.portals:
        portals[p.from_zone].append(p)
        portals[p.to_zone].append(p.reversed())
    zones = {
        name: Zone(name, name, kind, tuple(members), tuple(portals[name]))
        for name, (kind, members) in b.zones.items()
    }
    signatures = {
        sid: Signature(
            id=sid,
            zone=b.zone_of[sid],
            pose=b.poses[sid],
            payload_bytes=b.payload[sid],
            weight=0,
            layer=b.layer[sid],
            links=frozenset(b.links[sid]),
        )
        for sid in sorted(b.poses)
    }
    meta = {"name": spec.name, "seed": spec.seed, "generator": spec.to_dict()}
    return WorldMap(zones=zones, signatures=signatures, meta=meta)


def generate_with_manifest(spec: WorldSpec) -> tuple[WorldMap, list[Placement]]:
    spec.check()
    b = _build_semantic(spec)
    if spec.zoning == "grid":
        _rezone_grid(b, spec.cell_m)
    manifest = [
        Placement(sid, b.zone_of[sid], b.layer[sid], b.payload[sid], payload_checksum(spec.seed, sid, b.payload[sid]))
        for sid in sorted(b.poses)
    ]
    return _finish(b), manifest


def generate(spec: WorldSpec) -> WorldMap:
    spec.check()
    b = _build_semantic(spec)
    if spec.zoning == "grid":
        _rezone_grid(b, spec.cell_m)
    return _finish(b)


def semantic_twin(world: WorldMap) -> WorldMap | None:
    """Regenerate a grid-zoned world with semantic zoning (same geometry and ids)."""
    gen = world.meta.get("generator")
    if not gen or gen.get("zoning") != "grid":
        return None
    data = dict(gen)
    data["zoning"] = "semantic"
    data["cell_m"] = None
    return generate(WorldSpec.from_dict(data))


def portal_pairs(world: WorldMap) -> list[Portal]:
    """Each undirected portal once, as stored on its lexicographically smaller zone."""
    return [p for p in world.all_portals if p.from_zone < p.to_zone]


# --- fixture worlds ------------------------------------------------------

HOSPITAL_COUNTS = {"L1": 40, "H1": 30, "C2": 50, "H2": 30, "C3": 30, "room": 12}
HOSPITAL_SMALL_COUNTS = {"L1": 24, "H1": 20, "C2": 25, "H2": 20, "C3": 20, "room": 6}
UNVISITED_ROOMS = ("R11", "R12", "R14", "R15", "R22", "R23", "R24", "R25")
H1_LENGTH_M = 30.0
C2_LENGTH_M = 50.0
DOOR_POSITIONS_M = (5.0, 15.0, 25.0, 35.0, 45.0)
DEFAULT_GRID_CELL_M = 10.0


def hospital_spec(
    seed: int = 42,
    counts: Mapping[str, int] = HOSPITAL_COUNTS,
    zoning: str = "semantic",
    cell_m: float | None = None,
    portal_radius: float = DEFAULT_PORTAL_RADIUS,
    name: str = "hospital",
) -> WorldSpec:
    """Lobby L1, corridor ring H1-C2-H2-C3 and ten rooms on C2.

    Rooms R11..R15 sit on the inner side of C2 and R21..R25 on the outer
    side.  Corridor lengths are chosen so C3 ends at the lobby's north edge.
    """
    half = (math.ceil(math.sqrt(counts["L1"])) - 1) / 2.0
    edge = half + 0.5
    lengths = {"H1": H1_LENGTH_M, "C2": C2_LENGTH_M, "H2": H1_LENGTH_M + edge, "C3": C2_LENGTH_M - edge}
    corridors = [CorridorSpec(n, lengths[n], counts[n] / lengths[n]) for n in ("H1", "C2", "H2", "C3")]
    rooms = []
    for row, side in ((1, 1), (2, -1)):
        for k, pos in enumerate(DOOR_POSITIONS_M, start=1):
            rooms.append(RoomSpec(f"R{row}{k}", "C2", pos, counts["room"], side))
    if zoning == "grid" and cell_m is None:
        cell_m = DEFAULT_GRID_CELL_M
    return WorldSpec(
        seed=seed,
        lobby=LobbySpec("L1", counts["L1"]),
        corridors=corridors,
        rooms=rooms,
        portal_radius=portal_radius,
        zoning=zoning,
        cell_m=cell_m,
        loop_closed=True,
        name=name,
    )


def scenario_world(seed: int = 42) -> WorldMap:
    """The canonical evaluation world (15 zones, 300 signatures)."""
    return generate(hospital_spec(seed))


def scenario_world_small(seed: int = 42) -> WorldMap:
    """Reduced-count variant in which every adjacent zone pair fits in 50."""
    return generate(hospital_spec(seed, HOSPITAL_SMALL_COUNTS, name="hospital-small"))


def grid_world(seed: int = 42, cell_m: float = DEFAULT_GRID_CELL_M) -> WorldMap:
    return generate(hospital_spec(seed, zoning="grid", cell_m=cell_m, name="hospital-grid"))


PRESETS = {
    "hospital": lambda seed: hospital_spec(seed),
    "hospital-small": lambda seed: hospital_spec(seed, HOSPITAL_SMALL_COUNTS, name="hospital-small"),
    "hospital-grid": lambda seed: hospital_spec(seed, zoning="grid", name="hospital-grid"),
}


def load_spec(path) -> WorldSpec:
    with open(path, encoding="utf-8") as fh:
        return WorldSpec.from_dict(json.load(fh))
