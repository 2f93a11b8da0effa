"""Entry points for hermetic runs: seeded flight-dataset generation, the
constraint-intersection itinerary solver, the deterministic two-participant
trace replayer, and the event-log differ.

The replayer merges two trace files by timestamp and drives the full
pipeline (mirror, recognizer, event application, replication) without
cameras; with the in-process transport the run is bit-reproducible.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .config import DEFAULT_RECOGNIZER, RecognizerConfig
from .landmarks import FramePacket, Handedness, load_trace, mirror
from .net import InProcessHub, Op, Presence, Snapshot
from .recognizer import GestureEvent, Recognizer
from .replica import Document, PresenceStore
from .scene import (
    ElementKind,
    Flight,
    FlightDataset,
    Scenario,
    SceneDoc,
    apply_event,
    load_scenario,
    project,
    query_flights,
)

AIRLINE_CODES = ("AA", "BX", "CJ", "DM", "EV", "FZ", "GK", "HQ")
DEPART_DAYS = 60
COST_MIN = 50
COST_MAX = 2000

_MASK64 = (1 << 64) - 1


class Xorshift64Star:
    """Deterministic PRNG over 64-bit integer state; portable by construction."""

    def __init__(self, seed: int):
        self.state = (seed & _MASK64) or 0x9E3779B97F4A7C15

    def u32(self) -> int:
        s = self.state
        s ^= (s >> 12) & _MASK64
        s ^= (s << 25) & _MASK64
        s ^= (s >> 27) & _MASK64
        self.state = s
        return ((s * 0x2545F4914F6CDD1D) & _MASK64) >> 32

    def below(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        return (self.u32() * n) >> 32

    def random(self) -> float:
        """Float in [0, 1) with 24 bits of resolution."""
        return (self.u32() >> 8) / 16777216.0


def load_airports(path: str) -> dict[str, tuple[float, float]]:
    with open(path, "r", encoding="utf-8") as fh:
        rows = json.load(fh)
    return {row["code"]: (row["lat"], row["lon"]) for row in rows}


def gen_flights(seed: int, n: int, airports: dict[str, tuple[float, float]]) -> FlightDataset:
    """Procedural flights over a fixed airport table, deterministic per seed."""
    if n < 1:
        raise ValueError(f"need at least 1 flight, got {n}")
    if len(airports) < 2:
        raise ValueError(f"need at least 2 airports, got {len(airports)}")
    codes = list(airports)
    rng = Xorshift64Star(seed)
    log_span = math.log(COST_MAX / COST_MIN)
    flights = []
    for _ in range(n):
        origin = codes[rng.below(len(codes))]
        dest = codes[rng.below(len(codes))]
        while dest == origin:
            dest = codes[rng.below(len(codes))]
        cost = int(COST_MIN * math.exp(rng.random() * log_span))
        ox, oy = project(*airports[origin])
        dx, dy = project(*airports[dest])
        dist = math.sqrt((ox - dx) ** 2 + (oy - dy) ** 2)
        duration = 45 + int(dist * 1500.0) + rng.below(90)
        flights.append(
            Flight(
                origin=origin,
                dest=dest,
                airline=AIRLINE_CODES[rng.below(len(AIRLINE_CODES))],
                cost=cost,
                duration_min=duration,
                depart_day=rng.below(DEPART_DAYS),
            )
        )
    return FlightDataset(airports=dict(airports), flights=flights, seed=seed)


@dataclass(frozen=True)
class Constraints:
    budget_max: int
    date_window: tuple[int, int]
    airlines: frozenset[str]

    def __post_init__(self) -> None:
        if self.budget_max <= 0:
            raise ValueError(f"budget must be positive, got {self.budget_max}")
        if self.date_window[0] > self.date_window[1]:
            raise ValueError(f"window start after end: {self.date_window}")

    @staticmethod
    def from_obj(obj: dict) -> "Constraints":
        return Constraints(
            budget_max=obj["budget_max"],
            date_window=(obj["date_window"][0], obj["date_window"][1]),
            airlines=frozenset(obj["airlines"]),
        )


def solve_itineraries(
    dataset: FlightDataset,
    constraints_a: Constraints,
    constraints_b: Constraints,
    origins: set[str],
    dests: set[str],
) -> list[Flight]:
    """Flights satisfying both participants' constraints at once."""
    budget = min(constraints_a.budget_max, constraints_b.budget_max)
    lo = max(constraints_a.date_window[0], constraints_b.date_window[0])
    hi = min(constraints_a.date_window[1], constraints_b.date_window[1])
    airlines = constraints_a.airlines & constraints_b.airlines
    return [
        f
        for f in query_flights(dataset, origins, dests)
        if f.cost <= budget and lo <= f.depart_day <= hi and f.airline in airlines
    ]


def load_constraint_fixture(path: str) -> tuple[Constraints, Constraints, set[str], set[str]]:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    return (
        Constraints.from_obj(obj["a"]),
        Constraints.from_obj(obj["b"]),
        set(obj["origins"]),
        set(obj["dests"]),
    )


# -- replay -------------------------------------------------------------------


@dataclass
class ReplayConfig:
    trace_a: str
    trace_b: str
    scenario: str
    seed: int = 42
    server_url: Optional[str] = None  # None selects the in-process transport
    out_dir: Optional[str] = None
    flight_count: int = 2000
    recognizer: RecognizerConfig = DEFAULT_RECOGNIZER


@dataclass
class ReplayResult:
    event_lines: list[str]
    snapshot_a: str
    snapshot_b: str
    origins: set[str]
    dests: set[str]
    flights: list[Flight] = field(default_factory=list)
    presence_log: int = 0

    def converged(self) -> bool:
        return self.snapshot_a == self.snapshot_b


def merge_traces(
    packets_a: Iterable[FramePacket], packets_b: Iterable[FramePacket]
) -> list[FramePacket]:
    """Interleave two traces by (t_ms, participant)."""
    merged = list(packets_a) + list(packets_b)
    merged.sort(key=lambda p: (p.t_ms, p.participant))
    return merged


def _presence_payload(recog: Recognizer, packet: FramePacket) -> dict:
    hands = {}
    for side in (Handedness.LEFT, Handedness.RIGHT):
        frame = packet.hand(side)
        if frame is None:
            continue
        track = recog.state.hands[side]
        hands[side.value] = {
            "shape": track.shape.value,
            "cursor": [frame.point(8).x, frame.point(8).y],
            "dwell": recog.dwell_progress(side),
            "skeleton": [[p.x, p.y, p.z] for p in frame.points],
        }
    return {"hands": hands}


class _ReplaySession:
    """Per-participant pipeline state shared by both transports."""

    def __init__(self, participant: str, scenario: Scenario, cfg: RecognizerConfig):
        self.participant = participant
        self.doc = Document(replica_id=participant)
        self.scene = SceneDoc(scenario, self.doc)
        self.recognizer = Recognizer(participant, cfg)
        self.presence_seq = 0


def replay(config: ReplayConfig) -> ReplayResult:
    """Run the full pipeline over two traces and converge both replicas."""
    scenario = load_scenario(config.scenario)
    packets_a = load_trace(config.trace_a)
    packets_b = load_trace(config.trace_b)
    participants = sorted(
        {p.participant for p in packets_a} | {p.participant for p in packets_b}
    )
    if len(participants) != 2:
        raise ValueError(f"replay needs exactly 2 participants, got {participants}")

    if config.server_url is not None:
        return _replay_server(config, scenario, packets_a, packets_b, participants)
    return _replay_inprocess(config, scenario, packets_a, packets_b, participants)


def _finish_result(
    config: ReplayConfig,
    scenario: Scenario,
    sessions: dict[str, _ReplaySession],
    event_lines: list[str],
    presence_count: int,
) -> ReplayResult:
    first = sessions[sorted(sessions)[0]]
    origins = first.scene.origins()
    dests = first.scene.dests()
    flights: list[Flight] = []
    airports = {
        el.payload["code"]: (el.payload["lat"], el.payload["lon"])
        for el in scenario.elements.values()
        if el.kind is ElementKind.AIRPORT
    }
    if airports and origins and dests:
        dataset = gen_flights(config.seed, config.flight_count, airports)
        flights = query_flights(dataset, origins, dests)

    keys = sorted(sessions)
    result = ReplayResult(
        event_lines=event_lines,
        snapshot_a=sessions[keys[0]].doc.canonical_json(),
        snapshot_b=sessions[keys[1]].doc.canonical_json(),
        origins=origins,
        dests=dests,
        flights=flights,
        presence_log=presence_count,
    )
    if config.out_dir:
        _write_outputs(config.out_dir, result)
    return result


def _write_outputs(out_dir: str, result: ReplayResult) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "events.jsonl"), "w", encoding="utf-8") as fh:
        for line in result.event_lines:
            fh.write(line + "\n")
    with open(os.path.join(out_dir, "snapshot_a.json"), "w", encoding="utf-8") as fh:
        fh.write(result.snapshot_a + "\n")
    with open(os.path.join(out_dir, "snapshot_b.json"), "w", encoding="utf-8") as fh:
        fh.write(result.snapshot_b + "\n")
    with open(os.path.join(out_dir, "flights.json"), "w", encoding="utf-8") as fh:
        json.dump([f.to_obj() for f in result.flights], fh, separators=(",", ":"))
        fh.write("\n")


def _replay_inprocess(
    config: ReplayConfig,
    scenario: Scenario,
    packets_a: list[FramePacket],
    packets_b: list[FramePacket],
    participants: list[str],
) -> ReplayResult:
    hub = InProcessHub("replay")
    presence = PresenceStore()
    sessions: dict[str, _ReplaySession] = {}
    conns: dict[str, str] = {}
    from .net import Join

    for participant in participants:
        sess = _ReplaySession(participant, scenario, config.recognizer)
        conn = hub.connect()
        hub.send(conn, Join(session="replay", participant=participant, replica=participant))
        sessions[participant] = sess
        conns[participant] = conn

    def drain_all(now_ms: int) -> int:
        seen_presence = 0
        for participant, conn in conns.items():
            sess = sessions[participant]
            for message in hub.drain(conn):
                if isinstance(message, Op):
                    sess.doc.apply_remote(message.op)
                elif isinstance(message, Snapshot):
                    sess.doc.merge_snapshot(list(message.entries))
                elif isinstance(message, Presence):
                    presence.update(message.participant, message.seq, message.payload, now_ms)
                    seen_presence += 1
        return seen_presence

    drain_all(0)
    event_lines: list[str] = []
    presence_count = 0
    last_t = 0

    def process(sess: _ReplaySession, events: list[GestureEvent], t: int) -> None:
        nonlocal presence_count
        for event in events:
            event_lines.append(event.to_json())
            for op in apply_event(sess.scene, event):
                hub.send(conns[sess.participant], Op(op=op), now_ms=t)
        presence_count += drain_all(t)

    for packet in merge_traces(packets_a, packets_b):
        sess = sessions[packet.participant]
        t = packet.t_ms
        last_t = max(last_t, t)
        normalized = mirror(packet)
        events = sess.recognizer.step(normalized)
        process(sess, events, t)
        sess.presence_seq += 1
        hub.send(
            conns[sess.participant],
            Presence(
                participant=sess.participant,
                seq=sess.presence_seq,
                t_ms=t,
                payload=_presence_payload(sess.recognizer, normalized),
            ),
            now_ms=t,
        )
        hub.flush_presence(t)
        presence_count += drain_all(t)

    for participant in participants:
        sess = sessions[participant]
        process(sess, sess.recognizer.finish(last_t), last_t)

    return _finish_result(config, scenario, sessions, event_lines, presence_count)


def _replay_server(
    config: ReplayConfig,
    scenario: Scenario,
    packets_a: list[FramePacket],
    packets_b: list[FramePacket],
    participants: list[str],
) -> ReplayResult:
    import asyncio
    import uuid

    from .net import RelayClient

    session_id = f"replay-{uuid.uuid4().hex[:8]}"

    async def run() -> ReplayResult:
        sessions: dict[str, _ReplaySession] = {}
        clients: dict[str, RelayClient] = {}
        for participant in participants:
            sess = _ReplaySession(participant, scenario, config.recognizer)
            client = RelayClient(config.server_url, session_id, participant, sess.doc)
            await client.connect()
            sessions[participant] = sess
            clients[participant] = client

        event_lines: list[str] = []
        last_t = 0
        for packet in merge_traces(packets_a, packets_b):
            sess = sessions[packet.participant]
            last_t = max(last_t, packet.t_ms)
            normalized = mirror(packet)
            for event in sess.recognizer.step(normalized):
                event_lines.append(event.to_json())
                for op in apply_event(sess.scene, event):
                    await clients[packet.participant].send_op(op)
        for participant in participants:
            sess = sessions[participant]
            for event in sess.recognizer.finish(last_t):
                event_lines.append(event.to_json())
                for op in apply_event(sess.scene, event):
                    await clients[participant].send_op(op)

        # Quiesce: wait until both replicas agree (relay latency bound).
        loop = asyncio.get_running_loop()
        deadline = loop.time() + 2.0
        keys = sorted(sessions)
        while loop.time() < deadline:
            if sessions[keys[0]].doc.canonical_json() == sessions[keys[1]].doc.canonical_json():
                break
            await asyncio.sleep(0.02)
        for client in clients.values():
            await client.close()
        return _finish_result(config, scenario, sessions, event_lines, 0)

    return asyncio.run(run())


def diff_event_logs(path_a: str, path_b: str, limit: int = 20) -> list[str]:
    """Line-by-line comparison; returns human-readable differences."""
    with open(path_a, "r", encoding="utf-8") as fh:
        lines_a = [ln.rstrip("\n") for ln in fh]
    with open(path_b, "r", encoding="utf-8") as fh:
        lines_b = [ln.rstrip("\n") for ln in fh]
    diffs = []
    for i in range(max(len(lines_a), len(lines_b))):
        a = lines_a[i] if i < len(lines_a) else "<missing>"
        b = lines_b[i] if i < len(lines_b) else "<missing>"
        if a != b:
            diffs.append(f"line {i + 1}:\n  a: {a}\n  b: {b}")
            if len(diffs) >= limit:
                diffs.append("... (truncated)")
                break
    if len(lines_a) != len(lines_b):
        diffs.append(f"length: a={len(lines_a)} lines, b={len(lines_b)} lines")
    return diffs
