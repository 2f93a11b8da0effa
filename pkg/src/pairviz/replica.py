"""Replicated shared-state document: a last-writer-wins register map.

Every key is an independent register ordered by (Lamport clock, replica id);
replicas converge under arbitrary op delivery order. Ephemeral per-participant
presence (cursors, skeletons, marquees) is kept out of the document and
expires on its own.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Iterator

PRESENCE_TTL_MS = 500


@dataclass(frozen=True)
class ReplicaOp:
    key: str
    value: Any
    clock: int
    replica: str

    def to_obj(self) -> dict:
        return {"key": self.key, "value": self.value, "clock": self.clock, "replica": self.replica}

    @staticmethod
    def from_obj(obj: dict) -> "ReplicaOp":
        key = obj.get("key")
        if not isinstance(key, str):
            raise ValueError(f"op entry: bad key {key!r}")
        clock = obj.get("clock")
        if not isinstance(clock, int) or isinstance(clock, bool) or clock < 1:
            raise ValueError(f"op entry {key!r}: bad clock {clock!r}")
        replica = obj.get("replica")
        if not isinstance(replica, str) or not replica:
            raise ValueError(f"op entry {key!r}: bad replica {replica!r}")
        if "value" not in obj:
            raise ValueError(f"op entry {key!r}: missing value")
        return ReplicaOp(key=key, value=obj["value"], clock=clock, replica=replica)


class Document:
    """One replica's view of the shared document. Single-writer."""

    def __init__(self, replica_id: str):
        if not replica_id:
            raise ValueError("replica_id must be non-empty")
        self.replica_id = replica_id
        self._entries: dict[str, tuple[Any, int, str]] = {}
        self._clock = 0

    def local_set(self, key: str, value: Any) -> ReplicaOp:
        """Write locally and return the op to broadcast."""
        try:
            json.dumps(value)
        except (TypeError, ValueError) as exc:
            raise ValueError(f"value for {key!r} is not JSON-serializable") from exc
        self._clock += 1
        self._entries[key] = (value, self._clock, self.replica_id)
        return ReplicaOp(key=key, value=value, clock=self._clock, replica=self.replica_id)

    def apply_remote(self, op: ReplicaOp) -> bool:
        """LWW merge; returns True iff the stored value changed."""
        self._clock = max(self._clock, op.clock)
        stored = self._entries.get(op.key)
        if stored is not None and (op.clock, op.replica) <= (stored[1], stored[2]):
            return False
        self._entries[op.key] = (op.value, op.clock, op.replica)
        return True

    def get(self, key: str, default: Any = None) -> Any:
        entry = self._entries.get(key)
        return entry[0] if entry is not None else default

    def __contains__(self, key: str) -> bool:
        return key in self._entries

    def items(self) -> Iterator[tuple[str, Any]]:
        for key, (value, _, _) in self._entries.items():
            yield key, value

    def items_with_prefix(self, prefix: str) -> Iterator[tuple[str, Any]]:
        for key, (value, _, _) in self._entries.items():
            if key.startswith(prefix):
                yield key, value

    def clock(self) -> int:
        return self._clock

    def snapshot(self) -> list[ReplicaOp]:
        """Full state as ops, key-sorted; merging it elsewhere reproduces us."""
        return [
            ReplicaOp(key=k, value=v, clock=c, replica=r)
            for k, (v, c, r) in sorted(self._entries.items())
        ]

    def merge_snapshot(self, entries: list[ReplicaOp] | list[dict]) -> int:
        changed = 0
        for entry in entries:
            op = entry if isinstance(entry, ReplicaOp) else ReplicaOp.from_obj(entry)
            if self.apply_remote(op):
                changed += 1
        return changed

    def canonical_json(self) -> str:
        """Deterministic serialization; byte-equal iff documents converged."""
        return json.dumps(
            [op.to_obj() for op in self.snapshot()], separators=(",", ":"), sort_keys=True
        )


@dataclass
class _PresenceEntry:
    seq: int
    payload: dict
    t_ms: int


class PresenceStore:
    """Self-expiring per-participant presence; never part of the document."""

    def __init__(self, ttl_ms: int = PRESENCE_TTL_MS):
        self.ttl_ms = ttl_ms
        self._entries: dict[str, _PresenceEntry] = {}

    def update(self, participant: str, seq: int, payload: dict, now_ms: int) -> bool:
        """Apply if seq advances; stale or duplicate seqs are dropped."""
        entry = self._entries.get(participant)
        if entry is not None and seq <= entry.seq:
            return False
        self._entries[participant] = _PresenceEntry(seq=seq, payload=payload, t_ms=now_ms)
        return True

    def read(self, now_ms: int) -> dict[str, dict]:
        return {
            p: e.payload
            for p, e in self._entries.items()
            if now_ms - e.t_ms <= self.ttl_ms
        }

    def drop(self, participant: str) -> None:
        self._entries.pop(participant, None)
