"""Single-file Long-Term Memory store.

Layout::

    b"ZMLT" | u16 version | records... | index JSON | u64 index offset

Each record is ``u32 body_len`` followed by the body, and the body is
``u32 meta_len | meta JSON | payload``.  All integers are little-endian.
The index maps signature id to ``(offset, length)`` of the whole record.
"""

from __future__ import annotations

import hashlib
import json
import mmap
import os
import struct
from dataclasses import dataclass
from typing import Iterable

from .errors import StoreFormatError, UnknownSignature, UnknownZone
from .model import Pose, Signature, WorldMap, signatures_of

MAGIC = b"ZMLT"
VERSION = 1
_HEADER = struct.Struct("<4sH")
_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")


def synthetic_payload(seed: int, sig_id: int, size: int) -> bytes:
    """Deterministic stand-in for a signature's sensor data."""
    if size <= 0:
        return b""
    return hashlib.shake_256(f"zonemem:{seed}:{sig_id}".encode()).digest(size)


def payload_checksum(seed: int, sig_id: int, size: int) -> str:
    return hashlib.sha256(synthetic_payload(seed, sig_id, size)).hexdigest()


def _meta_record(sig: Signature) -> bytes:
    meta = {
        "id": sig.id,
        "zone": sig.zone,
        "pose": sig.pose.to_list(),
        "payload_bytes": sig.payload_bytes,
        "weight": sig.weight,
        "layer": sig.layer,
        "links": sorted(sig.links),
    }
    return json.dumps(meta, separators=(",", ":")).encode()


@dataclass
class StoreStats:
    reads: int = 0
    writes: int = 0
    bytes_read: int = 0
    bytes_written: int = 0
    simulated_latency_ms: float = 0.0


class LtmStore:
    """Read side of the store.  Use :meth:`build` to create one from a map."""

    def __init__(self, path, latency_ms: float = 0.0):
        self.path = os.fspath(path)
        self.latency_ms = latency_ms
        self.stats = StoreStats()
        self._fh = open(self.path, "rb")
        try:
            self._mm = mmap.mmap(self._fh.fileno(), 0, access=mmap.ACCESS_READ)
        except ValueError as exc:  # zero-length file
            self._fh.close()
            raise StoreFormatError(f"{self.path}: empty store file") from exc
        self.index = self._read_index()

    @classmethod
    def build(cls, world: WorldMap, path, latency_ms: float = 0.0) -> "LtmStore":
        seed = int(world.meta.get("seed", 0))
        index: dict[str, list[int]] = {}
        written = 0
        tmp = os.fspath(path) + ".tmp"
        with open(tmp, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, VERSION))
            for sid in sorted(world.signatures):
                sig = world.signatures[sid]
                meta = _meta_record(sig)
                body = _U32.pack(len(meta)) + meta + synthetic_payload(seed, sid, sig.payload_bytes)
                offset = fh.tell()
                fh.write(_U32.pack(len(body)))
                fh.write(body)
                index[str(sid)] = [offset, _U32.size + len(body)]
                written += 1
            index_offset = fh.tell()
            fh.write(json.dumps({"version": VERSION, "records": index}, separators=(",", ":")).encode())
            fh.write(_U64.pack(index_offset))
        os.replace(tmp, path)
        store = cls(path, latency_ms=latency_ms)
        store.stats.writes = written
        store.stats.bytes_written = os.path.getsize(path)
        return store

    @classmethod
    def open(cls, path, latency_ms: float = 0.0) -> "LtmStore":
        return cls(path, latency_ms=latency_ms)

    def _read_index(self) -> dict[int, tuple[int, int]]:
        mm = self._mm
        if len(mm) < _HEADER.size + _U64.size:
            raise StoreFormatError(f"{self.path}: truncated store")
        magic, version = _HEADER.unpack_from(mm, 0)
        if magic != MAGIC:
            raise StoreFormatError(f"{self.path}: bad magic {magic!r}")
        if version != VERSION:
            raise StoreFormatError(f"{self.path}: unsupported version {version}")
        (index_offset,) = _U64.unpack_from(mm, len(mm) - _U64.size)
        raw = json.loads(mm[index_offset : len(mm) - _U64.size])
        return {int(k): (v[0], v[1]) for k, v in raw["records"].items()}

    def close(self) -> None:
        self._mm.close()
        self._fh.close()

    def __enter__(self) -> "LtmStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def __len__(self) -> int:
        return len(self.index)

    def __contains__(self, sig_id: int) -> bool:
        return sig_id in self.index

    def _record(self, sig_id: int) -> tuple[Signature, memoryview, int]:
        try:
            offset, length = self.index[sig_id]
        except KeyError:
            raise UnknownSignature(sig_id) from None
        view = memoryview(self._mm)[offset : offset + length]
        (body_len,) = _U32.unpack_from(view, 0)
        (meta_len,) = _U32.unpack_from(view, _U32.size)
        meta_start = 2 * _U32.size
        meta = json.loads(bytes(view[meta_start : meta_start + meta_len]))
        payload = view[meta_start + meta_len : _U32.size + body_len]
        sig = Signature(
            id=meta["id"],
            zone=meta["zone"],
            pose=Pose.from_list(meta["pose"]),
            payload_bytes=meta["payload_bytes"],
            weight=meta["weight"],
            layer=meta["layer"],
            links=frozenset(meta["links"]),
        )
        return sig, payload, length

    def fetch(self, ids: Iterable[int]) -> list[Signature]:
        """Return full signatures in request order, counting each as one read."""
        ids = list(ids)
        for sid in ids:
            if sid not in self.index:
                raise UnknownSignature(sid)
        out = []
        for sid in ids:
            sig, _, length = self._record(sid)
            out.append(sig)
            self.stats.reads += 1
            self.stats.bytes_read += length
            self.stats.simulated_latency_ms += self.latency_ms
        return out

    def fetch_zone(self, world: WorldMap, zone: str) -> list[Signature]:
        if zone not in world.zones:
            raise UnknownZone(zone)
        return self.fetch(signatures_of(world, zone))

    def payload(self, sig_id: int) -> bytes:
        """Raw payload bytes for inspection; does not count as a load."""
        _, payload, _ = self._record(sig_id)
        return bytes(payload)

    def checksum(self, sig_id: int) -> str:
        return hashlib.sha256(self.payload(sig_id)).hexdigest()
