"""Hand-landmark data model, trace file format, and mirroring normalization.

Coordinates are camera-frame fractions: x in [0, 1] left to right, y in
[0, 1] top to bottom, z is relative depth (negative toward the camera).
Applying :func:`mirror` once at ingestion flips x so that both
participants gesture in the same shared scene coordinate space.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator

# Indices into the fixed 21-point hand topology.
WRIST = 0
THUMB_TIP, INDEX_TIP, MIDDLE_TIP, RING_TIP, PINKY_TIP = 4, 8, 12, 16, 20
THUMB_BASE, INDEX_BASE, MIDDLE_BASE, RING_BASE, PINKY_BASE = 2, 5, 9, 13, 17
THUMB_MID, INDEX_MID, MIDDLE_MID, RING_MID, PINKY_MID = 3, 6, 10, 14, 18

FINGERTIPS = (THUMB_TIP, INDEX_TIP, MIDDLE_TIP, RING_TIP, PINKY_TIP)
LANDMARK_COUNT = 21

# Trackers overshoot frame edges; anything past this slack drops the hand.
COORD_SLACK = 0.25


class TraceParseError(ValueError):
    """A trace record could not be turned into a valid FramePacket."""


class DegenerateHandError(ValueError):
    """Hand geometry collapsed (coincident reference points)."""


class Handedness(str, Enum):
    LEFT = "Left"
    RIGHT = "Right"


@dataclass(frozen=True)
class Landmark:
    x: float
    y: float
    z: float


@dataclass(frozen=True)
class HandFrame:
    handedness: Handedness
    points: tuple[Landmark, ...]

    def __post_init__(self) -> None:
        if len(self.points) != LANDMARK_COUNT:
            raise TraceParseError(
                f"landmarks: expected {LANDMARK_COUNT}, got {len(self.points)}"
            )

    def point(self, index: int) -> Landmark:
        return self.points[index]


@dataclass(frozen=True)
class FramePacket:
    t_ms: int
    participant: str
    hands: tuple[HandFrame, ...]

    def hand(self, handedness: Handedness) -> HandFrame | None:
        for h in self.hands:
            if h.handedness == handedness:
                return h
        return None


def dist2d(a: Landmark, b: Landmark) -> float:
    dx = a.x - b.x
    dy = a.y - b.y
    return math.sqrt(dx * dx + dy * dy)


def hand_scale(hand: HandFrame) -> float:
    """Normalizer for camera-distance-dependent thresholds.

    Euclidean (x, y) distance between the wrist and the middle-finger
    base joint; invariant under hand translation and rotation in-plane.
    """
    scale = dist2d(hand.point(WRIST), hand.point(MIDDLE_BASE))
    if scale <= 0.0:
        raise DegenerateHandError("wrist and middle-finger base coincide")
    return scale


def mirror(packet: FramePacket) -> FramePacket:
    """Flip x -> 1 - x on every landmark; an involution."""
    hands = tuple(
        HandFrame(
            handedness=h.handedness,
            points=tuple(Landmark(1.0 - p.x, p.y, p.z) for p in h.points),
        )
        for h in packet.hands
    )
    return FramePacket(t_ms=packet.t_ms, participant=packet.participant, hands=hands)


def _require(record: dict, field: str, kind: type, context: str = "") -> object:
    where = f"{context}{field}"
    if field not in record:
        raise TraceParseError(f"{where}: missing")
    value = record[field]
    if kind is int and isinstance(value, bool):
        raise TraceParseError(f"{where}: expected integer, got bool")
    if not isinstance(value, kind):
        raise TraceParseError(f"{where}: expected {kind.__name__}, got {type(value).__name__}")
    return value


def _parse_coord(value: object, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise TraceParseError(f"{where}: expected number, got {type(value).__name__}")
    value = float(value)
    if not math.isfinite(value):
        raise TraceParseError(f"{where}: not finite")
    return value


def _in_frame(p: Landmark) -> bool:
    lo, hi = -COORD_SLACK, 1.0 + COORD_SLACK
    return lo <= p.x <= hi and lo <= p.y <= hi


def parse_trace_record(line: str) -> FramePacket:
    """Parse one trace-file record into a validated FramePacket.

    Hands whose landmarks stray past the overshoot slack are dropped for
    the frame; structurally bad records raise TraceParseError naming the
    offending field.
    """
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise TraceParseError(f"record: invalid JSON ({exc.msg})") from exc
    if not isinstance(record, dict):
        raise TraceParseError("record: expected JSON object")

    t_ms = _require(record, "t_ms", int)
    participant = _require(record, "participant", str)
    if not participant:
        raise TraceParseError("participant: empty")
    raw_hands = _require(record, "hands", list)
    if len(raw_hands) > 2:
        raise TraceParseError(f"hands: expected at most 2, got {len(raw_hands)}")

    hands: list[HandFrame] = []
    seen: set[Handedness] = set()
    for i, raw in enumerate(raw_hands):
        ctx = f"hands[{i}]."
        if not isinstance(raw, dict):
            raise TraceParseError(f"hands[{i}]: expected object")
        side_text = _require(raw, "handedness", str, ctx)
        try:
            side = Handedness(side_text)
        except ValueError:
            raise TraceParseError(f"{ctx}handedness: unknown value {side_text!r}") from None
        if side in seen:
            raise TraceParseError(f"{ctx}handedness: duplicate {side.value}")
        seen.add(side)
        raw_points = _require(raw, "landmarks", list, ctx)
        if len(raw_points) != LANDMARK_COUNT:
            raise TraceParseError(f"landmarks: expected {LANDMARK_COUNT}, got {len(raw_points)}")
        points = []
        for j, triple in enumerate(raw_points):
            where = f"{ctx}landmarks[{j}]"
            if not isinstance(triple, list) or len(triple) != 3:
                raise TraceParseError(f"{where}: expected [x, y, z]")
            points.append(
                Landmark(
                    x=_parse_coord(triple[0], f"{where}.x"),
                    y=_parse_coord(triple[1], f"{where}.y"),
                    z=_parse_coord(triple[2], f"{where}.z"),
                )
            )
        if all(_in_frame(p) for p in points):
            hands.append(HandFrame(handedness=side, points=tuple(points)))

    return FramePacket(t_ms=t_ms, participant=participant, hands=tuple(hands))


def _fmt(value: float) -> float:
    # json emits the shortest round-trip repr; -0.0 normalized for stability.
    return value + 0.0 if value != 0.0 else 0.0


def serialize_trace_record(packet: FramePacket) -> str:
    """Canonical one-line JSON form; inverse of parse for shipped traces."""
    obj = {
        "t_ms": packet.t_ms,
        "participant": packet.participant,
        "hands": [
            {
                "handedness": h.handedness.value,
                "landmarks": [[_fmt(p.x), _fmt(p.y), _fmt(p.z)] for p in h.points],
            }
            for h in packet.hands
        ],
    }
    return json.dumps(obj, separators=(",", ":"))


def read_trace(lines: Iterable[str]) -> Iterator[FramePacket]:
    """Parse a trace stream, enforcing per-participant t_ms monotonicity."""
    last_t: dict[str, int] = {}
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            packet = parse_trace_record(line)
        except TraceParseError as exc:
            raise TraceParseError(f"line {lineno}: {exc}") from exc
        prev = last_t.get(packet.participant)
        if prev is not None and packet.t_ms < prev:
            raise TraceParseError(
                f"line {lineno}: t_ms: {packet.t_ms} precedes {prev} for "
                f"participant {packet.participant}"
            )
        last_t[packet.participant] = packet.t_ms
        yield packet


def load_trace(path: str) -> list[FramePacket]:
    with open(path, "r", encoding="utf-8") as fh:
        return list(read_trace(fh))
