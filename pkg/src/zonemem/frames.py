"""Per-frame report record and nearest-signature queries shared by both policies."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .model import Pose, WorldMap


@dataclass
class FrameReport:
    frame: int
    pose: Pose
    localized: int | None
    curr_zone: str | None
    loads: int
    unloads: int
    wm_size_peak: int
    wm_size_end: int
    active_zones: tuple[str, ...] = ()
    backlog: int = 0
    candidates_added: int = 0
    immune: int = 0
    evicted: tuple[str, ...] = ()
    activated: str | None = None
    multi_portal: bool = False
    notes: list[str] = field(default_factory=list)


class SignatureIndex:
    """Id-sorted coordinate arrays for brute-force nearest queries.

    Ties resolve to the lowest id because ``argmin``/``lexsort`` keep the
    first occurrence and ids are sorted ascending.
    """

    def __init__(self, world: WorldMap):
        self.ids = np.array(sorted(world.signatures), dtype=np.int64)
        self.xy = np.array([[world.signatures[s].pose.x, world.signatures[s].pose.y] for s in self.ids], dtype=float)
        self.row = {int(s): i for i, s in enumerate(self.ids)}

    def _dist(self, pose: Pose) -> np.ndarray:
        return np.hypot(self.xy[:, 0] - pose.x, self.xy[:, 1] - pose.y)

    def nearest(self, pose: Pose, among: Iterable[int] | None = None) -> int | None:
        if not len(self.ids):
            return None
        d = self._dist(pose)
        if among is not None:
            mask = np.zeros(len(self.ids), dtype=bool)
            mask[[self.row[s] for s in among]] = True
            if not mask.any():
                return None
            d = np.where(mask, d, np.inf)
        return int(self.ids[int(np.argmin(d))])

    def k_nearest(self, pose: Pose, among: Iterable[int], k: int) -> list[int]:
        rows = np.array([self.row[s] for s in among], dtype=np.int64)
        if k <= 0 or not len(rows):
            return []
        d = self._dist(pose)[rows]
        order = np.lexsort((self.ids[rows], d))
        return [int(s) for s in self.ids[rows][order[:k]]]


def signature_index(world: WorldMap) -> SignatureIndex:
    """Build once per map and cache on the (otherwise immutable) instance."""
    try:
        return world.__dict__["_sig_index"]
    except KeyError:
        idx = SignatureIndex(world)
        world.__dict__["_sig_index"] = idx
        return idx
