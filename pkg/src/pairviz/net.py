"""Wire protocol, relay session logic, and websocket transport.

Messages are single JSON objects per text frame. The relay joins at most
two participants per session, forwards ops and presence between them,
keeps an authoritative LWW-merged document, and serves it as a snapshot
to every joiner (so a late joiner catches up immediately).
"""
from __future__ import annotations

import asyncio
import json
import logging
import re
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Union

from .replica import Document, ReplicaOp

logger = logging.getLogger(__name__)

PRESENCE_FORWARD_MS = 33


@dataclass(frozen=True)
class Join:
    session: str
    participant: str
    replica: str


@dataclass(frozen=True)
class Snapshot:
    entries: tuple[ReplicaOp, ...]


@dataclass(frozen=True)
class Op:
    op: ReplicaOp


@dataclass(frozen=True)
class Presence:
    participant: str
    seq: int
    t_ms: int
    payload: dict = field(default_factory=dict)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Presence)
            and self.participant == other.participant
            and self.seq == other.seq
            and self.t_ms == other.t_ms
            and self.payload == other.payload
        )


@dataclass(frozen=True)
class Leave:
    participant: str


@dataclass(frozen=True)
class Error:
    code: str
    detail: str = ""


Message = Union[Join, Snapshot, Op, Presence, Leave, Error]


def encode(message: Message) -> str:
    if isinstance(message, Join):
        obj: dict[str, Any] = {
            "type": "join",
            "session": message.session,
            "participant": message.participant,
            "replica": message.replica,
        }
    elif isinstance(message, Snapshot):
        obj = {"type": "snapshot", "entries": [op.to_obj() for op in message.entries]}
    elif isinstance(message, Op):
        obj = {"type": "op", **message.op.to_obj()}
    elif isinstance(message, Presence):
        obj = {
            "type": "presence",
            "participant": message.participant,
            "seq": message.seq,
            "t_ms": message.t_ms,
            "payload": message.payload,
        }
    elif isinstance(message, Leave):
        obj = {"type": "leave", "participant": message.participant}
    elif isinstance(message, Error):
        obj = {"type": "error", "code": message.code, "detail": message.detail}
    else:
        raise TypeError(f"not a Message: {message!r}")
    return json.dumps(obj, separators=(",", ":"))


def decode(text: str) -> Message:
    """Parse a frame; malformed input decodes to Error("malformed", ...).

    Unknown fields are ignored for forward compatibility.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        return Error(code="malformed", detail=f"invalid JSON: {exc.msg}")
    if not isinstance(obj, dict):
        return Error(code="malformed", detail="expected object")
    tag = obj.get("type")
    try:
        if tag == "join":
            return Join(
                session=_req_str(obj, "session"),
                participant=_req_str(obj, "participant"),
                replica=_req_str(obj, "replica"),
            )
        if tag == "snapshot":
            entries = obj.get("entries")
            if not isinstance(entries, list):
                raise ValueError("entries: expected array")
            return Snapshot(entries=tuple(ReplicaOp.from_obj(e) for e in entries))
        if tag == "op":
            return Op(op=ReplicaOp.from_obj(obj))
        if tag == "presence":
            payload = obj.get("payload", {})
            if not isinstance(payload, dict):
                raise ValueError("payload: expected object")
            return Presence(
                participant=_req_str(obj, "participant"),
                seq=_req_int(obj, "seq"),
                t_ms=_req_int(obj, "t_ms"),
                payload=payload,
            )
        if tag == "leave":
            return Leave(participant=_req_str(obj, "participant"))
        if tag == "error":
            return Error(code=_req_str(obj, "code"), detail=obj.get("detail", ""))
    except ValueError as exc:
        return Error(code="malformed", detail=str(exc))
    return Error(code="malformed", detail=f"unknown type {tag!r}")


def _req_str(obj: dict, fld: str) -> str:
    value = obj.get(fld)
    if not isinstance(value, str) or not value:
        raise ValueError(f"{fld}: expected non-empty string")
    return value


def _req_int(obj: dict, fld: str) -> int:
    value = obj.get(fld)
    if not isinstance(value, int) or isinstance(value, bool):
        raise ValueError(f"{fld}: expected integer")
    return value


# -- transport-agnostic session logic -----------------------------------------

Delivery = tuple[str, Message]  # (connection id, outbound message)


class SessionCore:
    """Relay logic for one two-party session.

    Message handling is serialized by the caller (one logical queue per
    session); this class itself holds no locks and no wall-clock access.
    """

    def __init__(self, session_id: str):
        self.session_id = session_id
        self.doc = Document(replica_id=f"relay:{session_id}")
        self.conn_participant: dict[str, str] = {}
        self.participant_conn: dict[str, str] = {}
        self._presence_sent_ms: dict[str, int] = {}
        self._presence_pending: dict[str, Presence] = {}

    def participants(self) -> set[str]:
        return set(self.participant_conn)

    def _peers(self, conn_id: str) -> list[str]:
        return [c for c in self.conn_participant if c != conn_id]

    def handle(self, conn_id: str, message: Message, now_ms: int) -> list[Delivery]:
        if isinstance(message, Join):
            return self._handle_join(conn_id, message)
        if isinstance(message, Error):
            logger.warning("session %s: client error %s", self.session_id, message)
            return []
        participant = self.conn_participant.get(conn_id)
        if participant is None:
            return [(conn_id, Error(code="not_joined"))]
        if isinstance(message, Op):
            self.doc.apply_remote(message.op)
            return [(peer, message) for peer in self._peers(conn_id)]
        if isinstance(message, Presence):
            return self._handle_presence(conn_id, participant, message, now_ms)
        if isinstance(message, Leave):
            return self.drop(conn_id)
        if isinstance(message, Snapshot):
            logger.warning("session %s: ignoring client snapshot", self.session_id)
            return []
        return [(conn_id, Error(code="malformed", detail="unhandled message"))]

    def _handle_join(self, conn_id: str, message: Join) -> list[Delivery]:
        existing = self.participant_conn.get(message.participant)
        if existing is None and len(self.participant_conn) >= 2:
            return [(conn_id, Error(code="session_full"))]
        if existing is not None and existing != conn_id:
            # Reconnect: the new connection supersedes the stale one.
            self.conn_participant.pop(existing, None)
        self.conn_participant[conn_id] = message.participant
        self.participant_conn[message.participant] = conn_id
        return [(conn_id, Snapshot(entries=tuple(self.doc.snapshot())))]

    def _handle_presence(
        self, conn_id: str, participant: str, message: Presence, now_ms: int
    ) -> list[Delivery]:
        last = self._presence_sent_ms.get(participant)
        if last is not None and now_ms - last < PRESENCE_FORWARD_MS:
            self._presence_pending[participant] = message  # newest wins
            return []
        self._presence_sent_ms[participant] = now_ms
        self._presence_pending.pop(participant, None)
        return [(peer, message) for peer in self._peers(conn_id)]

    def flush_presence(self, now_ms: int) -> list[Delivery]:
        """Release throttled presence whose cooldown elapsed."""
        out: list[Delivery] = []
        for participant in list(self._presence_pending):
            last = self._presence_sent_ms.get(participant, 0)
            if now_ms - last < PRESENCE_FORWARD_MS:
                continue
            message = self._presence_pending.pop(participant)
            self._presence_sent_ms[participant] = now_ms
            conn_id = self.participant_conn.get(participant)
            if conn_id is None:
                continue
            out.extend((peer, message) for peer in self._peers(conn_id))
        return out

    def has_pending_presence(self) -> bool:
        return bool(self._presence_pending)

    def drop(self, conn_id: str) -> list[Delivery]:
        participant = self.conn_participant.pop(conn_id, None)
        if participant is None:
            return []
        if self.participant_conn.get(participant) == conn_id:
            self.participant_conn.pop(participant, None)
        self._presence_pending.pop(participant, None)
        return [(peer, Leave(participant=participant)) for peer in self._peers(conn_id)]

    def empty(self) -> bool:
        return not self.conn_participant


# -- deterministic in-process transport ---------------------------------------


class InProcessHub:
    """Synchronous relay for tests and replays; no sockets, no wall clock."""

    def __init__(self, session_id: str = "local"):
        self.core = SessionCore(session_id)
        self.inboxes: dict[str, list[Message]] = {}
        self._next = 0

    def connect(self) -> str:
        self._next += 1
        conn_id = f"conn{self._next}"
        self.inboxes[conn_id] = []
        return conn_id

    def send(self, conn_id: str, message: Message, now_ms: int = 0) -> None:
        # Round-trip through the codec so the wire format is always exercised.
        decoded = decode(encode(message))
        for target, out in self.core.handle(conn_id, decoded, now_ms):
            self.inboxes[target].append(out)

    def flush_presence(self, now_ms: int) -> None:
        for target, out in self.core.flush_presence(now_ms):
            self.inboxes[target].append(out)

    def drain(self, conn_id: str) -> list[Message]:
        out = self.inboxes[conn_id]
        self.inboxes[conn_id] = []
        return out


class ReorderBuffer:
    """Scripted delay/reorder: shuffles across senders, FIFO per sender."""

    def __init__(self, rng):
        self.rng = rng
        self._queues: dict[str, list[Message]] = {}

    def push(self, sender: str, message: Message) -> None:
        self._queues.setdefault(sender, []).append(message)

    def drain(self) -> list[tuple[str, Message]]:
        out: list[tuple[str, Message]] = []
        pending = {s: list(q) for s, q in self._queues.items() if q}
        self._queues.clear()
        while pending:
            sender = self.rng.choice(sorted(pending))
            out.append((sender, pending[sender].pop(0)))
            if not pending[sender]:
                del pending[sender]
        return out


# -- websocket transport -------------------------------------------------------

_PATH_RE = re.compile(r"^/session/([A-Za-z0-9_-]+)$")


def _now_ms() -> int:
    return int(time.monotonic() * 1000)


class RelayServer:
    """Websocket relay serving many sessions at ws://host:port/session/{id}."""

    def __init__(self, host: str = "127.0.0.1", port: int = 8765):
        self.host = host
        self.port = port
        self._sessions: dict[str, SessionCore] = {}
        self._locks: dict[str, asyncio.Lock] = {}
        self._conns: dict[str, Any] = {}
        self._next_conn = 0
        self._server = None

    async def start(self) -> None:
        import websockets

        self._server = await websockets.serve(self._handler, self.host, self.port)

    async def stop(self) -> None:
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
            self._server = None

    async def serve_forever(self) -> None:
        await self.start()
        logger.info("relay listening on ws://%s:%s/session/{id}", self.host, self.port)
        try:
            await asyncio.Future()
        finally:
            await self.stop()

    def _session(self, session_id: str) -> tuple[SessionCore, asyncio.Lock]:
        if session_id not in self._sessions:
            self._sessions[session_id] = SessionCore(session_id)
            self._locks[session_id] = asyncio.Lock()
        return self._sessions[session_id], self._locks[session_id]

    async def _deliver(self, deliveries: list[Delivery]) -> None:
        for conn_id, message in deliveries:
            ws = self._conns.get(conn_id)
            if ws is None:
                continue
            try:
                await ws.send(encode(message))
            except Exception:
                logger.debug("dropping delivery to closed connection %s", conn_id)

    async def _flusher(self, session_id: str) -> None:
        core, lock = self._session(session_id)
        while not core.empty() or core.has_pending_presence():
            await asyncio.sleep(PRESENCE_FORWARD_MS / 1000.0)
            async with lock:
                deliveries = core.flush_presence(_now_ms())
            await self._deliver(deliveries)

    async def _handler(self, ws) -> None:
        path = getattr(getattr(ws, "request", None), "path", None) or getattr(ws, "path", "")
        match = _PATH_RE.match(path.split("?")[0])
        if not match:
            await ws.send(encode(Error(code="malformed", detail=f"bad path {path!r}")))
            await ws.close()
            return
        session_id = match.group(1)
        core, lock = self._session(session_id)
        self._next_conn += 1
        conn_id = f"ws{self._next_conn}"
        self._conns[conn_id] = ws
        flusher = asyncio.create_task(self._flusher(session_id))
        try:
            async for raw in ws:
                message = decode(raw)
                async with lock:
                    deliveries = core.handle(conn_id, message, _now_ms())
                await self._deliver(deliveries)
        except Exception as exc:
            logger.debug("connection %s ended: %s", conn_id, exc)
        finally:
            async with lock:
                deliveries = core.drop(conn_id)
            self._conns.pop(conn_id, None)
            await self._deliver(deliveries)
            flusher.cancel()


class RelayClient:
    """Client session: joins, syncs a local Document, relays presence."""

    def __init__(
        self,
        url: str,
        session: str,
        participant: str,
        doc: Document,
        on_presence: Optional[Callable[[Presence], None]] = None,
    ):
        self.url = url.rstrip("/")
        self.session = session
        self.participant = participant
        self.doc = doc
        self.on_presence = on_presence
        self.errors: list[Error] = []
        self._ws = None
        self._reader: Optional[asyncio.Task] = None
        self._snapshot_received = asyncio.Event()

    async def connect(self) -> None:
        import websockets

        self._ws = await websockets.connect(f"{self.url}/session/{self.session}")
        await self._ws.send(
            encode(Join(session=self.session, participant=self.participant, replica=self.doc.replica_id))
        )
        self._reader = asyncio.create_task(self._read_loop())
        await asyncio.wait_for(self._snapshot_received.wait(), timeout=5.0)

    async def _read_loop(self) -> None:
        try:
            async for raw in self._ws:
                message = decode(raw)
                if isinstance(message, Snapshot):
                    self.doc.merge_snapshot(list(message.entries))
                    self._snapshot_received.set()
                elif isinstance(message, Op):
                    self.doc.apply_remote(message.op)
                elif isinstance(message, Presence):
                    if self.on_presence is not None:
                        self.on_presence(message)
                elif isinstance(message, Error):
                    self.errors.append(message)
                    logger.warning("relay error: %s", message)
        except Exception as exc:
            logger.debug("reader for %s ended: %s", self.participant, exc)

    async def send_op(self, op: ReplicaOp) -> None:
        await self._ws.send(encode(Op(op=op)))

    async def send_presence(self, seq: int, t_ms: int, payload: dict) -> None:
        await self._ws.send(
            encode(Presence(participant=self.participant, seq=seq, t_ms=t_ms, payload=payload))
        )

    async def close(self) -> None:
        if self._ws is not None:
            try:
                await self._ws.send(encode(Leave(participant=self.participant)))
            except Exception:
                pass
            await self._ws.close()
        if self._reader is not None:
            self._reader.cancel()
