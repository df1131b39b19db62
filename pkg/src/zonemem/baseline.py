"""Behavioral model of stock RTAB-Map memory management.

One call to :func:`step` is one ``Process()`` tick: localize, retrieve
graph neighbours (capped by ``max_retrieved``), immunize the nodes nearest
to the robot, then forget down to ``memory_thr``.  Retrieval runs before
forgetting, so the WM size inside a frame can exceed the threshold, and a
large immune set can keep it above the threshold after the frame ends.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from .frames import FrameReport, signature_index
from .ltm import LtmStore
from .memory import (
    EventLedger,
    WorkingMemory,
    clear_immune,
    create_transient,
    drop_transient,
    load_into_wm,
    set_immune,
    touch,
    unload_from_wm,
)
from .model import Pose, WorldMap

TAG = "baseline"


@dataclass
class BaselineParams:
    memory_thr: int = 100
    max_retrieved: int | None = 10  # None means unlimited
    local_immunization_ratio: float = 0.25
    neighborhood_depth: int = 3

    def __post_init__(self) -> None:
        if self.memory_thr < 1:
            raise ValueError("memory_thr must be positive")
        if self.max_retrieved is not None and self.max_retrieved < 1:
            raise ValueError("max_retrieved must be positive")
        if not 0.0 <= self.local_immunization_ratio <= 1.0:
            raise ValueError("local_immunization_ratio must lie in [0, 1]")
        if self.neighborhood_depth < 0:
            raise ValueError("neighborhood_depth must be non-negative")


@dataclass
class BaselineState:
    params: BaselineParams = field(default_factory=BaselineParams)
    localized_node: int | None = None
    retrieval_backlog: dict[int, None] = field(default_factory=dict)  # insertion-ordered set
    weights: dict[int, int] = field(default_factory=dict)


def neighborhood(world: WorldMap, origin: int, depth: int) -> list[int]:
    """Signatures within ``depth`` hops of ``origin``, ordered by (hop, id)."""
    hops = {origin: 0}
    frontier = deque([origin])
    while frontier:
        sid = frontier.popleft()
        if hops[sid] == depth:
            continue
        for nb in world.signatures[sid].links:
            if nb not in hops:
                hops[nb] = hops[sid] + 1
                frontier.append(nb)
    return sorted(hops, key=lambda s: (hops[s], s))


def initial_localization(
    state: BaselineState, world: WorldMap, store: LtmStore, wm: WorkingMemory, ledger: EventLedger, frame: int = 0
) -> int:
    """Batch-load the whole map, as RTAB-Map does when relocalizing in a prior map."""
    ids = sorted(world.signatures)
    n = load_into_wm(wm, ledger, store.fetch(ids), frame, TAG)
    ledger.observe(len(wm), frame)
    return n


def step(
    state: BaselineState,
    world: WorldMap,
    store: LtmStore,
    wm: WorkingMemory,
    ledger: EventLedger,
    pose: Pose,
    frame: int,
) -> FrameReport:
    p = state.params
    index = signature_index(world)
    loads_before = ledger.cumulative_loads
    unloads_before = ledger.cumulative_unloads

    # (1) new node + localization against the full map
    create_transient(ledger, frame, TAG)
    node = index.nearest(pose)
    state.localized_node = node
    if node is not None:
        touch(wm, node, frame)
        state.weights[node] = state.weights.get(node, world.signatures[node].weight) + 1

    # (2) retrieve-first
    added = 0
    if node is not None:
        for sid in neighborhood(world, node, p.neighborhood_depth):
            if sid not in wm and sid not in state.retrieval_backlog:
                state.retrieval_backlog[sid] = None
                added += 1
    for sid in [s for s in state.retrieval_backlog if s in wm]:
        del state.retrieval_backlog[sid]
    quota = len(state.retrieval_backlog) if p.max_retrieved is None else p.max_retrieved
    batch = list(state.retrieval_backlog)[:quota]
    for sid in batch:
        del state.retrieval_backlog[sid]
    load_into_wm(wm, ledger, store.fetch(batch), frame, TAG)
    peak = len(wm)

    # (3) immunize the local region
    clear_immune(wm)
    n_immune = math.ceil(p.local_immunization_ratio * len(wm))
    immune = index.k_nearest(pose, wm.loaded, n_immune)
    set_immune(wm, immune, True)

    # (4) remove-later
    excess = len(wm) - p.memory_thr
    if excess > 0:
        pool = sorted(
            (s for s, meta in wm.loaded.items() if not meta.immune),
            key=lambda s: (state.weights.get(s, world.signatures[s].weight), wm.loaded[s].last_used_frame, s),
        )
        unload_from_wm(wm, ledger, pool[:excess], frame, TAG)

    # (5)
    drop_transient(ledger, frame, TAG)
    ledger.observe(peak, frame)
    return FrameReport(
        frame=frame,
        pose=pose,
        localized=node,
        curr_zone=world.zone_of(node) if node is not None else None,
        loads=ledger.cumulative_loads - loads_before,
        unloads=ledger.cumulative_unloads - unloads_before,
        wm_size_peak=peak,
        wm_size_end=len(wm),
        backlog=len(state.retrieval_backlog),
        candidates_added=added,
        immune=len(immune),
    )
