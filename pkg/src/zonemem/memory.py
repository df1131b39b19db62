"""Working Memory tier and the load/unload event ledger.

The WM only records what is loaded; the policies decide what to load and
what to forget.  Every transfer goes through :func:`load_into_wm` or
:func:`unload_from_wm` so the ledger stays the single source of truth for
the cumulative counters.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, NamedTuple

from .model import Signature


class EventKind(str, Enum):
    LOAD = "Load"
    UNLOAD = "Unload"
    TRANSIENT_CREATE = "TransientCreate"
    TRANSIENT_DROP = "TransientDrop"


class MemoryEvent(NamedTuple):
    frame: int
    kind: EventKind
    sig: int
    policy_tag: str


@dataclass
class SlotMeta:
    loaded_frame: int
    last_used_frame: int
    immune: bool = False


@dataclass
class WorkingMemory:
    memory_thr: int
    loaded: dict[int, SlotMeta] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.memory_thr < 1:
            raise ValueError("memory_thr must be positive")

    def __contains__(self, sig_id: int) -> bool:
        return sig_id in self.loaded

    def __len__(self) -> int:
        return len(self.loaded)

    def ids(self) -> list[int]:
        return list(self.loaded)

    def snapshot(self) -> frozenset[int]:
        return frozenset(self.loaded)


class UnloadResult(NamedTuple):
    removed: int
    skipped: frozenset[int]


@dataclass
class EventLedger:
    events: list[MemoryEvent] = field(default_factory=list)
    cumulative_loads: int = 0
    cumulative_unloads: int = 0
    transient_creates: int = 0
    transient_drops: int = 0
    peak_wm: int = 0
    frames: int = 0

    def append(self, event: MemoryEvent) -> None:
        if self.events and event.frame < self.events[-1].frame:
            raise ValueError(f"ledger frames must be non-decreasing ({event.frame} < {self.events[-1].frame})")
        self.events.append(event)
        if event.kind is EventKind.LOAD:
            self.cumulative_loads += 1
        elif event.kind is EventKind.UNLOAD:
            self.cumulative_unloads += 1
        elif event.kind is EventKind.TRANSIENT_CREATE:
            self.transient_creates += 1
        else:
            self.transient_drops += 1

    def observe(self, wm_size: int, frame: int) -> None:
        self.peak_wm = max(self.peak_wm, wm_size)
        self.frames = max(self.frames, frame + 1)

    def replay(self, initial: Iterable[int] = ()) -> set[int]:
        """Fold Load/Unload events over ``initial`` and return the loaded set."""
        state = set(initial)
        for ev in self.events:
            if ev.kind is EventKind.LOAD:
                state.add(ev.sig)
            elif ev.kind is EventKind.UNLOAD:
                state.discard(ev.sig)
        return state

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["frame", "kind", "sig", "policy_tag"])
        for ev in self.events:
            writer.writerow([ev.frame, ev.kind.value, ev.sig, ev.policy_tag])
        return buf.getvalue()

    def summary(self) -> dict[str, int]:
        return {
            "cumulative_loads": self.cumulative_loads,
            "cumulative_unloads": self.cumulative_unloads,
            "peak_wm": self.peak_wm,
            "frames": self.frames,
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"


def load_into_wm(
    wm: WorkingMemory,
    ledger: EventLedger,
    sigs: Iterable[Signature],
    frame: int,
    policy_tag: str = "",
) -> int:
    added = 0
    for sig in sigs:
        if sig.id in wm.loaded:
            continue
        wm.loaded[sig.id] = SlotMeta(loaded_frame=frame, last_used_frame=frame)
        ledger.append(MemoryEvent(frame, EventKind.LOAD, sig.id, policy_tag))
        added += 1
    return added


def unload_from_wm(
    wm: WorkingMemory,
    ledger: EventLedger,
    ids: Iterable[int],
    frame: int,
    policy_tag: str = "",
) -> UnloadResult:
    removed = 0
    skipped = []
    for sid in ids:
        meta = wm.loaded.get(sid)
        if meta is None:
            continue
        if meta.immune:
            skipped.append(sid)
            continue
        del wm.loaded[sid]
        ledger.append(MemoryEvent(frame, EventKind.UNLOAD, sid, policy_tag))
        removed += 1
    return UnloadResult(removed, frozenset(skipped))


def wm_size(wm: WorkingMemory) -> int:
    return len(wm.loaded)


def touch(wm: WorkingMemory, sig_id: int, frame: int) -> None:
    meta = wm.loaded.get(sig_id)
    if meta is not None:
        meta.last_used_frame = frame


def set_immune(wm: WorkingMemory, ids: Iterable[int], flag: bool = True) -> None:
    for sid in ids:
        meta = wm.loaded.get(sid)
        if meta is not None:
            meta.immune = flag


def clear_immune(wm: WorkingMemory) -> None:
    for meta in wm.loaded.values():
        meta.immune = False


def create_transient(ledger: EventLedger, frame: int, policy_tag: str, sig_id: int = 0) -> None:
    """Record the per-frame localization node; id 0 never collides with map ids."""
    ledger.append(MemoryEvent(frame, EventKind.TRANSIENT_CREATE, sig_id, policy_tag))


def drop_transient(ledger: EventLedger, frame: int, policy_tag: str, sig_id: int = 0) -> None:
    ledger.append(MemoryEvent(frame, EventKind.TRANSIENT_DROP, sig_id, policy_tag))
