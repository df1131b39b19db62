"""Exception hierarchy shared by every zonemem module."""

from __future__ import annotations


class ZonememError(Exception):
    """Base class for all library errors."""


class UnknownSignature(ZonememError, KeyError):
    def __init__(self, sig_id: int):
        super().__init__(sig_id)
        self.sig_id = sig_id

    def __str__(self) -> str:
        return f"unknown signature {self.sig_id}"


class UnknownZone(ZonememError, KeyError):
    def __init__(self, zone_id: str):
        super().__init__(zone_id)
        self.zone_id = zone_id

    def __str__(self) -> str:
        return f"unknown zone {self.zone_id!r}"


class SpecInvalid(ZonememError, ValueError):
    """A world spec broke one of its construction rules."""

    def __init__(self, rule: str, detail: str = ""):
        super().__init__(f"{rule}: {detail}" if detail else rule)
        self.rule = rule


class OversizedZone(ZonememError):
    def __init__(self, zone_id: str, size: int, memory_thr: int):
        super().__init__(f"zone {zone_id!r} has {size} signatures > memory_thr {memory_thr}")
        self.zone_id = zone_id
        self.size = size
        self.memory_thr = memory_thr


class EvictionExhausted(ZonememError):
    """No evictable zone is left but the predicted WM size is still above threshold."""

    def __init__(self, zone_id: str, predicted: int, memory_thr: int):
        super().__init__(
            f"cannot activate {zone_id!r}: predicted WM {predicted} > {memory_thr} "
            "with no evictable zone left"
        )
        self.zone_id = zone_id
        self.predicted = predicted
        self.memory_thr = memory_thr


class DisconnectedWaypoints(ZonememError):
    def __init__(self, a: str, b: str):
        super().__init__(f"no portal between {a!r} and {b!r}")
        self.pair = (a, b)


class MismatchedScenarios(ZonememError):
    pass


class StoreFormatError(ZonememError):
    pass
