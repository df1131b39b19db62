"""Semantic zone-based WM management.

The WM always holds exactly the keyframes of the active zones.  When the
robot comes within a portal's radius, the zone on the other side is
activated; if the predicted WM size would exceed ``memory_thr``, the least
recently used active zones are forgotten first, then the new zone is
loaded from LTM.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import EvictionExhausted, OversizedZone, UnknownZone
from .frames import FrameReport, signature_index
from .ltm import LtmStore
from .memory import (
    EventLedger,
    WorkingMemory,
    create_transient,
    drop_transient,
    load_into_wm,
    touch,
    unload_from_wm,
)
from .model import Portal, Pose, WorldMap, signatures_of

TAG = "zone"
ERROR = "error"
FORCE_LOAD = "force_load"


@dataclass
class ZonePolicyParams:
    memory_thr: int = 100
    portal_radius_override: float | None = None
    oversized_zone_mode: str = ERROR

    def __post_init__(self) -> None:
        if self.memory_thr < 1:
            raise ValueError("memory_thr must be >= 1")
        if self.oversized_zone_mode not in (ERROR, FORCE_LOAD):
            raise ValueError(f"oversized_zone_mode must be {ERROR!r} or {FORCE_LOAD!r}")
        if self.portal_radius_override is not None and self.portal_radius_override <= 0:
            raise ValueError("portal_radius_override must be positive")


@dataclass
class ZoneActivity:
    activated_frame: int
    last_active_frame: int


@dataclass
class ActiveZoneSet:
    zones: dict[str, ZoneActivity] = field(default_factory=dict)
    curr_zone: str | None = None

    def __contains__(self, zone: str) -> bool:
        return zone in self.zones

    def names(self) -> tuple[str, ...]:
        return tuple(self.zones)


@dataclass
class ActivationReport:
    zone: str
    evicted: list[str]
    loads: int
    unloads: int


def triggered_portals(
    world: WorldMap, pose: Pose, curr_zone: str, active=(), radius_override: float | None = None
) -> list[tuple[float, str, Portal]]:
    """Portals of ``curr_zone`` within reach of ``pose`` that lead to inactive zones."""
    if curr_zone not in world.zones:
        raise UnknownZone(curr_zone)
    hits = []
    for portal in world.zones[curr_zone].portals:
        radius = portal.radius if radius_override is None else radius_override
        d = pose.distance(portal.position)
        if d <= radius and portal.to_zone not in active:
            hits.append((d, portal.to_zone, portal))
    hits.sort(key=lambda h: (h[0], h[1]))
    return hits


def get_switching_zone(
    world: WorldMap, pose: Pose, curr_zone: str, active=(), radius_override: float | None = None
) -> str | None:
    hits = triggered_portals(world, pose, curr_zone, active, radius_override)
    return hits[0][1] if hits else None


def select_oldest_zone(state: ActiveZoneSet, exclude) -> str | None:
    candidates = [z for z in state.zones if z not in exclude]
    if not candidates:
        return None
    return min(
        candidates,
        key=lambda z: (state.zones[z].last_active_frame, state.zones[z].activated_frame, z),
    )


def activate(
    state: ActiveZoneSet,
    params: ZonePolicyParams,
    world: WorldMap,
    store: LtmStore,
    wm: WorkingMemory,
    ledger: EventLedger,
    z_new: str,
    frame: int,
) -> ActivationReport:
    if z_new not in world.zones:
        raise UnknownZone(z_new)
    if z_new in state.zones:
        raise ValueError(f"zone {z_new!r} is already active")
    new_size = len(signatures_of(world, z_new))
    if new_size > params.memory_thr and params.oversized_zone_mode == ERROR:
        raise OversizedZone(z_new, new_size, params.memory_thr)

    loads_before, unloads_before = ledger.cumulative_loads, ledger.cumulative_unloads
    state.zones[z_new] = ZoneActivity(activated_frame=frame, last_active_frame=frame)
    m_pre = len(wm) + new_size
    evicted = []
    protected = {z_new, state.curr_zone}
    while m_pre > params.memory_thr:
        z_old = select_oldest_zone(state, protected)
        if z_old is None:
            if params.oversized_zone_mode == FORCE_LOAD:
                break
            del state.zones[z_new]
            raise EvictionExhausted(z_new, m_pre, params.memory_thr)
        del state.zones[z_old]
        old_members = signatures_of(world, z_old)
        m_pre -= len(old_members)
        unload_from_wm(wm, ledger, old_members, frame, TAG)
        evicted.append(z_old)

    load_into_wm(wm, ledger, store.fetch_zone(world, z_new), frame, TAG)
    return ActivationReport(
        zone=z_new,
        evicted=evicted,
        loads=ledger.cumulative_loads - loads_before,
        unloads=ledger.cumulative_unloads - unloads_before,
    )


def start_in(
    state: ActiveZoneSet,
    params: ZonePolicyParams,
    world: WorldMap,
    store: LtmStore,
    wm: WorkingMemory,
    ledger: EventLedger,
    zone: str,
    frame: int = 0,
) -> ActivationReport:
    if len(wm):
        raise ValueError("start_in requires an empty WM")
    state.zones.clear()
    state.curr_zone = zone
    report = activate(state, params, world, store, wm, ledger, zone, frame)
    ledger.observe(len(wm), frame)
    return report


def step(
    state: ActiveZoneSet,
    params: ZonePolicyParams,
    world: WorldMap,
    store: LtmStore,
    wm: WorkingMemory,
    ledger: EventLedger,
    pose: Pose,
    frame: int,
) -> FrameReport:
    loads_before, unloads_before = ledger.cumulative_loads, ledger.cumulative_unloads

    # (1) localize among the active zones' keyframes
    create_transient(ledger, frame, TAG)
    node = signature_index(world).nearest(pose, wm.loaded)
    if node is not None:
        touch(wm, node, frame)
        zone = world.zone_of(node)
        if zone in state.zones:
            state.curr_zone = zone
    state.zones[state.curr_zone].last_active_frame = frame

    # (2) switching zone
    hits = triggered_portals(world, pose, state.curr_zone, state.zones, params.portal_radius_override)
    report = None
    if hits:
        report = activate(state, params, world, store, wm, ledger, hits[0][1], frame)
    peak = len(wm)

    # (3)
    drop_transient(ledger, frame, TAG)
    ledger.observe(peak, frame)
    notes = []
    if len({h[1] for h in hits}) > 1:
        notes.append("multiple portals triggered: " + ",".join(sorted({h[1] for h in hits})))
    return FrameReport(
        frame=frame,
        pose=pose,
        localized=node,
        curr_zone=state.curr_zone,
        loads=ledger.cumulative_loads - loads_before,
        unloads=ledger.cumulative_unloads - unloads_before,
        wm_size_peak=peak,
        wm_size_end=len(wm),
        active_zones=state.names(),
        evicted=tuple(report.evicted) if report else (),
        activated=report.zone if report else None,
        multi_portal=len({h[1] for h in hits}) > 1,
        notes=notes,
    )
