"""Frame-stepped scenario replay and trace comparison."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Mapping, Sequence

from . import baseline, zone_policy
from .baseline import BaselineParams, BaselineState
from .errors import DisconnectedWaypoints, MismatchedScenarios, UnknownZone, ZonememError
from .frames import FrameReport, signature_index
from .ltm import LtmStore
from .memory import EventLedger, WorkingMemory
from .model import Pose, WorldMap
from .worldgen import semantic_twin
from .zone_policy import ActiveZoneSet, ZonePolicyParams

BASELINE = "baseline"
ZONE = "zone"
POLICIES = (BASELINE, ZONE)

TRACE_COLUMNS = [
    "frame",
    "x",
    "y",
    "theta",
    "curr_zone",
    "wm_size_end",
    "wm_size_peak",
    "loads",
    "unloads",
    "cumulative_loads",
    "cumulative_unloads",
    "backlog",
    "active_zones",
]


@dataclass
class Scenario:
    name: str
    waypoints: list[str]
    speed_m_per_s: float = 1.0
    frame_hz: float = 1.0

    def __post_init__(self) -> None:
        if not self.waypoints:
            raise ValueError("scenario needs at least one waypoint")
        if self.speed_m_per_s <= 0 or self.frame_hz <= 0:
            raise ValueError("speed_m_per_s and frame_hz must be positive")

    @property
    def spacing_m(self) -> float:
        return self.speed_m_per_s / self.frame_hz

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Scenario":
        return cls(
            name=data["name"],
            waypoints=list(data["waypoints"]),
            speed_m_per_s=float(data.get("speed_m_per_s", 1.0)),
            frame_hz=float(data.get("frame_hz", 1.0)),
        )

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


PRESETS = {
    "loop": Scenario("loop", ["L1", "H1", "C2", "H2", "C3", "L1"]),
    "round-trip": Scenario("round-trip", ["R21", "C2", "R13", "C2", "R21"]),
}


def preset(name: str) -> Scenario:
    s = PRESETS[name]
    return Scenario(s.name, list(s.waypoints), s.speed_m_per_s, s.frame_hz)


def route_points(world: WorldMap, scenario: Scenario) -> list[tuple[float, float]]:
    """Polyline corners: centroid, then for each hop the exit keyframe, the
    portal, the entry keyframe and the next centroid."""
    for z in scenario.waypoints:
        if z not in world.zones:
            raise UnknownZone(z)
    index = signature_index(world)
    c = world.centroid(scenario.waypoints[0])
    pts = [(c.x, c.y)]
    for a, b in zip(scenario.waypoints, scenario.waypoints[1:]):
        if a == b:
            continue
        portals = world.portals_between(a, b)
        if not portals:
            raise DisconnectedWaypoints(a, b)
        here = Pose(*pts[-1])
        portal = min(portals, key=lambda p: here.distance(p.position))
        exit_sig = world.signatures[index.nearest(portal.position, world.signatures_of(a))].pose
        entry_sig = world.signatures[index.nearest(portal.position, world.signatures_of(b))].pose
        c = world.centroid(b)
        for x, y in ((exit_sig.x, exit_sig.y), (portal.position.x, portal.position.y), (entry_sig.x, entry_sig.y), (c.x, c.y)):
            if math.hypot(x - pts[-1][0], y - pts[-1][1]) > 1e-9:
                pts.append((x, y))
    return pts


def sample_polyline(pts: Sequence[tuple[float, float]], spacing: float) -> list[Pose]:
    if len(pts) == 1:
        return [Pose(pts[0][0], pts[0][1], 0.0)]
    segs = []
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        segs.append((x0, y0, x1, y1, math.hypot(x1 - x0, y1 - y0)))
    total = sum(s[4] for s in segs)
    n = int(math.floor(total / spacing + 1e-9))
    poses = []
    seg_i, seg_start = 0, 0.0
    for k in range(n + 1):
        s = k * spacing
        while seg_i < len(segs) - 1 and s > seg_start + segs[seg_i][4]:
            seg_start += segs[seg_i][4]
            seg_i += 1
        x0, y0, x1, y1, length = segs[seg_i]
        t = 0.0 if length == 0 else min(1.0, (s - seg_start) / length)
        poses.append(Pose(x0 + t * (x1 - x0), y0 + t * (y1 - y0), math.atan2(y1 - y0, x1 - x0)))
    last = segs[-1]
    if math.hypot(poses[-1].x - last[2], poses[-1].y - last[3]) > 1e-9:
        poses.append(Pose(last[2], last[3], math.atan2(last[3] - last[1], last[2] - last[0])))
    return poses


def plan_path(world: WorldMap, scenario: Scenario) -> list[Pose]:
    """Sample the route at ``speed / frame_hz`` metres per frame.

    A grid-zoned generated world has no semantic zone names, so its route is
    planned on the semantic zoning of the same geometry.
    """
    if any(z not in world.zones for z in scenario.waypoints):
        twin = semantic_twin(world)
        if twin is not None:
            world = twin
    return sample_polyline(route_points(world, scenario), scenario.spacing_m)


@dataclass
class ScenarioTrace:
    scenario: str
    policy: str
    params: dict[str, Any]
    records: list[FrameReport] = field(default_factory=list)
    ledger: EventLedger = field(default_factory=EventLedger)
    failed: bool = False
    error: str | None = None

    @property
    def initial_loads(self) -> int:
        """Loads performed at frame 0 (baseline batch load or the start zone)."""
        return self.records[0].loads if self.records else 0

    @property
    def totals(self) -> dict[str, Any]:
        return {
            "cumulative_loads": sum(r.loads for r in self.records),
            "cumulative_unloads": sum(r.unloads for r in self.records),
            "initial_loads": self.initial_loads,
            "loads_after_init": sum(r.loads for r in self.records[1:]),
            "peak_wm": max((r.wm_size_peak for r in self.records), default=0),
            "frames": len(self.records),
            "max_backlog": max((r.backlog for r in self.records), default=0),
            "transient_creates": self.ledger.transient_creates,
            "transient_drops": self.ledger.transient_drops,
        }

    def summary(self) -> dict[str, Any]:
        out = {"scenario": self.scenario, "policy": self.policy, "params": self.params, "failed": self.failed}
        if self.error:
            out["error"] = self.error
        out.update(self.totals)
        return out

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"

    def series(self, name: str) -> list[int]:
        if name == "cumulative_loads":
            acc, out = 0, []
            for r in self.records:
                acc += r.loads
                out.append(acc)
            return out
        if name == "cumulative_unloads":
            acc, out = 0, []
            for r in self.records:
                acc += r.unloads
                out.append(acc)
            return out
        return [getattr(r, name) for r in self.records]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        cl = cu = 0
        for r in self.records:
            cl += r.loads
            cu += r.unloads
            w.writerow(
                [
                    r.frame,
                    f"{r.pose.x:.6f}",
                    f"{r.pose.y:.6f}",
                    f"{r.pose.theta:.6f}",
                    r.curr_zone or "",
                    r.wm_size_end,
                    r.wm_size_peak,
                    r.loads,
                    r.unloads,
                    cl,
                    cu,
                    r.backlog,
                    ";".join(r.active_zones),
                ]
            )
        return buf.getvalue()


def trace_from_csv(text: str, scenario: str, policy: str, params: dict | None = None) -> ScenarioTrace:
    """Rebuild a trace (records only) from its CSV export."""
    rows = list(csv.DictReader(io.StringIO(text)))
    records = [
        FrameReport(
            frame=int(row["frame"]),
            pose=Pose(float(row["x"]), float(row["y"]), max(float(row["theta"]), -math.pi)),  # -pi rounds below -pi
            localized=None,
            curr_zone=row["curr_zone"] or None,
            loads=int(row["loads"]),
            unloads=int(row["unloads"]),
            wm_size_peak=int(row["wm_size_peak"]),
            wm_size_end=int(row["wm_size_end"]),
            active_zones=tuple(z for z in row["active_zones"].split(";") if z),
            backlog=int(row["backlog"]),
        )
        for row in rows
    ]
    return ScenarioTrace(scenario=scenario, policy=policy, params=params or {}, records=records)


def run(
    world: WorldMap,
    store: LtmStore,
    policy: str,
    params: BaselineParams | ZonePolicyParams,
    scenario: Scenario,
    poses: Sequence[Pose] | None = None,
) -> ScenarioTrace:
    """Replay ``scenario`` under ``policy``.

    ``poses`` overrides path planning, which lets a route planned on one
    zoning of a world be replayed on another zoning of the same geometry.
    Frame 0 is policy initialization at the first pose; pose ``i`` is
    stepped as frame ``i + 1``.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}")
    if poses is None:
        poses = plan_path(world, scenario)
    trace = ScenarioTrace(scenario=scenario.name, policy=policy, params=asdict(params))
    ledger = trace.ledger
    wm = WorkingMemory(params.memory_thr)
    first = poses[0]

    try:
        if policy == BASELINE:
            state = BaselineState(params=params)
            n = baseline.initial_localization(state, world, store, wm, ledger, frame=0)
            trace.records.append(
                FrameReport(0, first, None, None, n, 0, len(wm), len(wm))
            )
            for i, pose in enumerate(poses):
                trace.records.append(baseline.step(state, world, store, wm, ledger, pose, i + 1))
        else:
            zstate = ActiveZoneSet()
            start = scenario.waypoints[0]
            if start not in world.zones:
                start = world.zone_of(signature_index(world).nearest(first))
            rep = zone_policy.start_in(zstate, params, world, store, wm, ledger, start, frame=0)
            trace.records.append(
                FrameReport(0, first, None, start, rep.loads, rep.unloads, len(wm), len(wm), zstate.names(), activated=start)
            )
            for i, pose in enumerate(poses):
                trace.records.append(zone_policy.step(zstate, params, world, store, wm, ledger, pose, i + 1))
    except ZonememError as exc:
        trace.failed = True
        trace.error = f"{type(exc).__name__}: {exc}"
        # charge events already in the ledger for the unfinished frame
        done_l = sum(r.loads for r in trace.records)
        done_u = sum(r.unloads for r in trace.records)
        if ledger.cumulative_loads != done_l or ledger.cumulative_unloads != done_u:
            frame = trace.records[-1].frame + 1 if trace.records else 0
            trace.records.append(
                FrameReport(
                    frame,
                    poses[min(frame - 1, len(poses) - 1)] if frame else first,
                    None,
                    None,
                    ledger.cumulative_loads - done_l,
                    ledger.cumulative_unloads - done_u,
                    len(wm),
                    len(wm),
                    notes=["failed"],
                )
            )
    return trace


def _ratio(num: float, den: float) -> float | None:
    if den == 0:
        return 1.0 if num == 0 else None
    return num / den


@dataclass
class ComparisonReport:
    scenario: str
    policy_a: str
    policy_b: str
    totals_a: dict[str, Any]
    totals_b: dict[str, Any]
    load_ratio: float | None
    unload_ratio: float | None
    load_ratio_after_init: float | None
    peak_wm_a: int
    peak_wm_b: int
    per_frame: list[dict[str, int]]

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def compare(trace_a: ScenarioTrace, trace_b: ScenarioTrace) -> ComparisonReport:
    """Ratios are b / a, deltas are b - a.

    ``load_ratio_after_init`` sets all of b's loads against a's loads
    excluding a's frame-0 batch load.
    """
    if trace_a.scenario != trace_b.scenario or len(trace_a.records) != len(trace_b.records):
        raise MismatchedScenarios(
            f"{trace_a.scenario}/{len(trace_a.records)} frames vs {trace_b.scenario}/{len(trace_b.records)} frames"
        )
    ta, tb = trace_a.totals, trace_b.totals
    per_frame = [
        {
            "frame": ra.frame,
            "loads_delta": rb.loads - ra.loads,
            "unloads_delta": rb.unloads - ra.unloads,
            "wm_size_end_delta": rb.wm_size_end - ra.wm_size_end,
        }
        for ra, rb in zip(trace_a.records, trace_b.records)
    ]
    return ComparisonReport(
        scenario=trace_a.scenario,
        policy_a=trace_a.policy,
        policy_b=trace_b.policy,
        totals_a=ta,
        totals_b=tb,
        load_ratio=_ratio(tb["cumulative_loads"], ta["cumulative_loads"]),
        unload_ratio=_ratio(tb["cumulative_unloads"], ta["cumulative_unloads"]),
        load_ratio_after_init=_ratio(tb["cumulative_loads"], ta["loads_after_init"]),
        peak_wm_a=ta["peak_wm"],
        peak_wm_b=tb["peak_wm"],
        per_frame=per_frame,
    )
