"""Channel-telemetry broker: ThingSpeak-style channels with rate-limited writes.

A channel holds up to 8 named data fields, 3 location fields and 1 status
field, guarded by separate write/read API keys. Entries are append-only;
writes closer together than the channel's minimum interval are rejected
(never queued) with a retry-after hint, mirroring the public service's
fixed update cadence. State can be persisted to an append-only JSONL log
and reconstructed by replay.

Timestamps are virtual seconds supplied by the caller; the broker itself
never reads a clock, which is what makes headless and live runs share one
code path.
"""

from __future__ import annotations

import json
import os
import secrets
import random
import threading
from dataclasses import dataclass, field
from typing import Any

MAX_FIELDS = 8
DEFAULT_MIN_INTERVAL_S = 15.0

_KEY_ALPHABET = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"
_KEY_LEN = 16


class BrokerError(Exception):
    """Base class for broker faults (not used for write rejections)."""


class ChannelNotFound(BrokerError):
    pass


class AuthError(BrokerError):
    pass


class PersistenceError(BrokerError):
    pass


@dataclass(frozen=True)
class RateLimitPolicy:
    min_interval: float = DEFAULT_MIN_INTERVAL_S  # seconds between accepted writes

    def __post_init__(self):
        if self.min_interval <= 0:
            raise ValueError("min_interval must be positive")


@dataclass(frozen=True)
class WriteAccepted:
    entry_id: int

    @property
    def accepted(self) -> bool:
        return True


@dataclass(frozen=True)
class WriteRejected:
    reason: str  # "auth" | "rate_limited"
    retry_after: float | None = None  # seconds, present iff rate_limited

    @property
    def accepted(self) -> bool:
        return False


@dataclass
class FeedEntry:
    """One appended record: entry ids are dense and monotone per channel."""

    entry_id: int
    created_at: float
    fields: dict[int, Any] = field(default_factory=dict)  # 1-based slot -> value
    status: str | None = None
    latitude: float | None = None
    longitude: float | None = None
    elevation: float | None = None

    def to_record(self) -> dict:
        rec: dict[str, Any] = {
            "entry_id": self.entry_id,
            "created_at": self.created_at,
            "fields": {str(k): v for k, v in sorted(self.fields.items())},
        }
        for key in ("status", "latitude", "longitude", "elevation"):
            value = getattr(self, key)
            if value is not None:
                rec[key] = value
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "FeedEntry":
        return cls(
            entry_id=rec["entry_id"],
            created_at=rec["created_at"],
            fields={int(k): v for k, v in rec.get("fields", {}).items()},
            status=rec.get("status"),
            latitude=rec.get("latitude"),
            longitude=rec.get("longitude"),
            elevation=rec.get("elevation"),
        )

    def to_api_dict(self, n_named_fields: int) -> dict:
        """Wire shape: entry_id, created_at, field1..fieldN, then extras."""
        out: dict[str, Any] = {"entry_id": self.entry_id, "created_at": self.created_at}
        for i in range(1, max(n_named_fields, max(self.fields, default=0)) + 1):
            out[f"field{i}"] = self.fields.get(i)
        for key in ("status", "latitude", "longitude", "elevation"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        return out


@dataclass
class Channel:
    id: int
    name: str
    write_key: str
    read_key: str
    field_names: list[str]
    status_note: str | None = None
    location: tuple[float, float, float] | None = None  # lat, lon, elevation
    public: bool = False
    min_interval: float = DEFAULT_MIN_INTERVAL_S
    created_at: float = 0.0
    last_write_at: float | None = None
    entries: list[FeedEntry] = field(default_factory=list)

    def meta_dict(self, include_keys: bool = False) -> dict:
        out: dict[str, Any] = {
            "id": self.id,
            "name": self.name,
            "field_names": list(self.field_names),
            "status_note": self.status_note,
            "location": list(self.location) if self.location else None,
            "public": self.public,
            "min_interval": self.min_interval,
            "created_at": self.created_at,
            "last_entry_id": self.entries[-1].entry_id if self.entries else 0,
        }
        if include_keys:
            out["write_key"] = self.write_key
            out["read_key"] = self.read_key
        return out


class Broker:
    """In-memory channel store with optional JSONL persistence.

    All operations are safe under concurrent callers: a single lock makes
    the per-channel rate-limit check and append atomic, and read results
    are snapshots (copies) so callers never observe later mutation.
    """

    def __init__(self, policy: RateLimitPolicy | None = None,
                 persist_path: str | None = None,
                 rng: random.Random | None = None):
        self.policy = policy or RateLimitPolicy()
        self._rng = rng
        self._lock = threading.Lock()
        self._channels: dict[int, Channel] = {}
        self._by_write_key: dict[str, int] = {}
        self._next_id = 1
        self._persist_path = persist_path
        self._log_fh = None
        if persist_path:
            if os.path.exists(persist_path):
                self._replay(persist_path)
            self._log_fh = open(persist_path, "a", encoding="utf-8")

    # -- key material ----------------------------------------------------

    def _new_key(self) -> str:
        if self._rng is not None:
            return "".join(self._rng.choice(_KEY_ALPHABET) for _ in range(_KEY_LEN))
        return "".join(secrets.choice(_KEY_ALPHABET) for _ in range(_KEY_LEN))

    def _fresh_keys(self) -> tuple[str, str]:
        taken = set(self._by_write_key)
        for ch in self._channels.values():
            taken.add(ch.read_key)
        write_key = self._new_key()
        while write_key in taken:
            write_key = self._new_key()
        taken.add(write_key)
        read_key = self._new_key()
        while read_key in taken:
            read_key = self._new_key()
        return write_key, read_key

    # -- operations --------------------------------------------------------

    def create_channel(self, name: str, field_names: list[str],
                       location: tuple[float, float, float] | None = None,
                       status_note: str | None = None,
                       public: bool = False,
                       policy: RateLimitPolicy | None = None,
                       now: float = 0.0) -> Channel:
        """Register a channel with fresh distinct keys and an empty feed."""
        if len(field_names) > MAX_FIELDS:
            raise ValueError(
                f"a channel stores at most {MAX_FIELDS} data fields, got {len(field_names)}")
        with self._lock:
            write_key, read_key = self._fresh_keys()
            ch = Channel(
                id=self._next_id, name=name,
                write_key=write_key, read_key=read_key,
                field_names=list(field_names),
                status_note=status_note,
                location=tuple(location) if location else None,
                public=public,
                min_interval=(policy or self.policy).min_interval,
                created_at=now,
            )
            self._next_id += 1
            self._channels[ch.id] = ch
            self._by_write_key[ch.write_key] = ch.id
            self._append_log({"op": "create", "channel": self._channel_record(ch)})
            return ch

    def write_update(self, write_key: str, field_values: dict[int, Any],
                     now: float, status: str | None = None,
                     latitude: float | None = None, longitude: float | None = None,
                     elevation: float | None = None) -> WriteAccepted | WriteRejected:
        """Append an entry if the key is good and the rate window has passed.

        A write landing at exactly ``min_interval`` after the previous
        accepted write is accepted (>= semantics). Rejections never mutate
        channel state.
        """
        for slot in field_values:
            if not 1 <= slot <= MAX_FIELDS:
                raise ValueError(f"field slot {slot} outside 1..{MAX_FIELDS}")
        with self._lock:
            ch_id = self._by_write_key.get(write_key)
            if ch_id is None:
                return WriteRejected(reason="auth")
            ch = self._channels[ch_id]
            if ch.last_write_at is not None:
                elapsed = now - ch.last_write_at
                if elapsed < ch.min_interval:
                    return WriteRejected(reason="rate_limited",
                                         retry_after=ch.min_interval - elapsed)
            entry = FeedEntry(
                entry_id=len(ch.entries) + 1,
                created_at=now,
                fields=dict(field_values),
                status=status,
                latitude=latitude, longitude=longitude, elevation=elevation,
            )
            ch.entries.append(entry)
            ch.last_write_at = now
            self._append_log({"op": "entry", "channel_id": ch.id,
                              "entry": entry.to_record()})
            return WriteAccepted(entry_id=entry.entry_id)

    def _authorized_channel(self, channel_id: int, read_key: str | None) -> Channel:
        ch = self._channels.get(channel_id)
        if ch is None:
            raise ChannelNotFound(f"no channel with id {channel_id}")
        if not ch.public and read_key != ch.read_key:
            raise AuthError("bad read key")
        return ch

    def read_last(self, channel_id: int, read_key: str | None = None) -> FeedEntry | None:
        with self._lock:
            ch = self._authorized_channel(channel_id, read_key)
            if not ch.entries:
                return None
            last = ch.entries[-1]
            return FeedEntry.from_record(last.to_record())

    def read_feed(self, channel_id: int, read_key: str | None = None,
                  since_entry_id: int = 0) -> list[FeedEntry]:
        """Entries with entry_id > since, ascending."""
        with self._lock:
            ch = self._authorized_channel(channel_id, read_key)
            return [FeedEntry.from_record(e.to_record())
                    for e in ch.entries if e.entry_id > since_entry_id]

    def channel_meta(self, channel_id: int, read_key: str | None = None) -> dict:
        with self._lock:
            return self._authorized_channel(channel_id, read_key).meta_dict()

    def list_channels(self) -> list[dict]:
        """Admin view: every channel's metadata including keys."""
        with self._lock:
            return [ch.meta_dict(include_keys=True)
                    for _, ch in sorted(self._channels.items())]

    def channel(self, channel_id: int) -> Channel:
        """Admin/internal access without auth; raises if unknown."""
        with self._lock:
            ch = self._channels.get(channel_id)
            if ch is None:
                raise ChannelNotFound(f"no channel with id {channel_id}")
            return ch

    # -- persistence -------------------------------------------------------

    @staticmethod
    def _channel_record(ch: Channel) -> dict:
        return {
            "id": ch.id, "name": ch.name,
            "write_key": ch.write_key, "read_key": ch.read_key,
            "field_names": list(ch.field_names),
            "status_note": ch.status_note,
            "location": list(ch.location) if ch.location else None,
            "public": ch.public,
            "min_interval": ch.min_interval,
            "created_at": ch.created_at,
        }

    def _append_log(self, record: dict) -> None:
        if self._log_fh is None:
            return
        self._log_fh.write(json.dumps(record, sort_keys=True,
                                      separators=(",", ":")) + "\n")
        self._log_fh.flush()

    def _replay(self, path: str) -> None:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        for i, line in enumerate(lines):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError:
                if i == len(lines) - 1:
                    break  # torn tail from a crash mid-append; discard
                raise PersistenceError(f"{path}:{i + 1}: corrupt log record")
            self._apply_record(record, where=f"{path}:{i + 1}")

    def _apply_record(self, record: dict, where: str) -> None:
        op = record.get("op")
        if op == "create":
            c = record["channel"]
            ch = Channel(
                id=c["id"], name=c["name"],
                write_key=c["write_key"], read_key=c["read_key"],
                field_names=list(c["field_names"]),
                status_note=c.get("status_note"),
                location=tuple(c["location"]) if c.get("location") else None,
                public=c.get("public", False),
                min_interval=c.get("min_interval", self.policy.min_interval),
                created_at=c.get("created_at", 0.0),
            )
            self._channels[ch.id] = ch
            self._by_write_key[ch.write_key] = ch.id
            self._next_id = max(self._next_id, ch.id + 1)
        elif op == "entry":
            ch = self._channels.get(record["channel_id"])
            if ch is None:
                raise PersistenceError(f"{where}: entry for unknown channel")
            entry = FeedEntry.from_record(record["entry"])
            ch.entries.append(entry)
            ch.last_write_at = entry.created_at
        else:
            raise PersistenceError(f"{where}: unknown op {op!r}")

    def dump_state(self) -> bytes:
        """Canonical byte serialization of the full broker state."""
        with self._lock:
            state = {
                "next_id": self._next_id,
                "channels": [
                    {
                        **self._channel_record(ch),
                        "last_write_at": ch.last_write_at,
                        "entries": [e.to_record() for e in ch.entries],
                    }
                    for _, ch in sorted(self._channels.items())
                ],
            }
        return json.dumps(state, sort_keys=True, separators=(",", ":")).encode()

    def close(self) -> None:
        if self._log_fh is not None:
            self._log_fh.flush()
            self._log_fh.close()
            self._log_fh = None
