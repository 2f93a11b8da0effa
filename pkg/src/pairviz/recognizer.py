"""Geometric hand-shape classification and the gesture state machine.

Shapes are classified per frame from landmark geometry, debounced over a
fixed frame count, and fed through per-hand plus bimanual state machines
that emit discrete gesture events: ephemeral pointing, thumb-tap persistent
selection, spread marquees, pinch drags, two-handed connect, fist panning
and two-fist zooming. All timing comes from packet timestamps, never the
wall clock, so replaying a trace twice yields identical event logs.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .config import DEFAULT_RECOGNIZER, RecognizerConfig
from .landmarks import (
    FINGERTIPS,
    INDEX_BASE,
    INDEX_MID,
    INDEX_TIP,
    MIDDLE_BASE,
    MIDDLE_MID,
    MIDDLE_TIP,
    PINKY_BASE,
    PINKY_MID,
    PINKY_TIP,
    RING_BASE,
    RING_MID,
    RING_TIP,
    THUMB_TIP,
    WRIST,
    DegenerateHandError,
    FramePacket,
    HandFrame,
    Handedness,
    dist2d,
    hand_scale,
)


class SequencingError(ValueError):
    """Packets arrived out of order or from the wrong participant."""


class GesturePreconditionError(ValueError):
    """An operation was called on a hand in the wrong shape."""


class HandShape(str, Enum):
    POINT = "Point"
    POINT_THUMB_OUT = "PointThumbOut"
    SPREAD = "Spread"
    PINCH = "Pinch"
    FIST = "Fist"
    OTHER = "Other"
    ABSENT = "Absent"


class Finger(str, Enum):
    THUMB = "Thumb"
    INDEX = "Index"
    MIDDLE = "Middle"
    RING = "Ring"
    PINKY = "Pinky"


_FINGER_TIP_MID = {
    Finger.INDEX: (INDEX_TIP, INDEX_MID),
    Finger.MIDDLE: (MIDDLE_TIP, MIDDLE_MID),
    Finger.RING: (RING_TIP, RING_MID),
    Finger.PINKY: (PINKY_TIP, PINKY_MID),
}

# Shapes where the hand is present but drives no gesture; entering one
# releases the hand's ephemeral selection.
_IDLE_SHAPES = frozenset({HandShape.FIST, HandShape.OTHER, HandShape.ABSENT})


class GestureKind(str, Enum):
    EPHEMERAL_POINT = "EphemeralPoint"
    PERSIST_TAP = "PersistTap"
    MARQUEE = "Marquee"
    PINCH_BEGIN = "PinchBegin"
    PINCH_MOVE = "PinchMove"
    PINCH_END = "PinchEnd"
    CONNECT_HOLD = "ConnectHold"
    PAN_BEGIN = "PanBegin"
    PAN_MOVE = "PanMove"
    PAN_END = "PanEnd"
    ZOOM_BEGIN = "ZoomBegin"
    ZOOM_MOVE = "ZoomMove"
    ZOOM_END = "ZoomEnd"
    HAND_IDLE = "HandIdle"


@dataclass(frozen=True)
class Circle:
    center: tuple[float, float]
    radius: float


@dataclass(frozen=True)
class GestureEvent:
    t_ms: int
    participant: str
    hand: Handedness
    kind: GestureKind
    payload: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> str:
        obj = {
            "t_ms": self.t_ms,
            "participant": self.participant,
            "hand": self.hand.value,
            "kind": self.kind.value,
            "payload": self.payload,
        }
        return json.dumps(obj, separators=(",", ":"))

    @staticmethod
    def from_json(line: str) -> "GestureEvent":
        obj = json.loads(line)
        return GestureEvent(
            t_ms=obj["t_ms"],
            participant=obj["participant"],
            hand=Handedness(obj["hand"]),
            kind=GestureKind(obj["kind"]),
            payload=obj.get("payload", {}),
        )


def finger_extended(
    hand: HandFrame, finger: Finger, cfg: RecognizerConfig = DEFAULT_RECOGNIZER
) -> bool:
    """Extension test: tip well past the middle joint's wrist radius.

    The thumb has no usable wrist-radius signal, so it is measured by its
    tip's distance to the index base relative to hand scale.
    """
    if finger is Finger.THUMB:
        gap = dist2d(hand.point(THUMB_TIP), hand.point(INDEX_BASE))
        return gap > cfg.thumb_ratio * hand_scale(hand)
    tip, mid = _FINGER_TIP_MID[finger]
    wrist = hand.point(WRIST)
    return dist2d(hand.point(tip), wrist) > cfg.extension_ratio * dist2d(hand.point(mid), wrist)


def _palm_toward_camera(hand: HandFrame) -> bool:
    # Winding of wrist -> index base -> pinky base flips with palm
    # orientation in mirrored coordinates; heuristic only.
    w = hand.point(WRIST)
    ib = hand.point(INDEX_BASE)
    pb = hand.point(PINKY_BASE)
    cross = (ib.x - w.x) * (pb.y - w.y) - (ib.y - w.y) * (pb.x - w.x)
    return (cross < 0.0) == (hand.handedness is Handedness.RIGHT)


def classify_shape(hand: HandFrame, cfg: RecognizerConfig = DEFAULT_RECOGNIZER) -> HandShape:
    """Classify one hand's instantaneous shape from landmark geometry."""
    scale = hand_scale(hand)
    ext = {f: finger_extended(hand, f, cfg) for f in Finger}

    # Pinch first: the closed thumb-index ring defeats the Point/Spread tests.
    pinch_gap = dist2d(hand.point(THUMB_TIP), hand.point(INDEX_TIP))
    if (
        pinch_gap < cfg.pinch_ratio * scale
        and ext[Finger.MIDDLE]
        and ext[Finger.RING]
        and ext[Finger.PINKY]
    ):
        return HandShape.PINCH

    if not any(ext.values()):
        return HandShape.FIST

    if (
        ext[Finger.INDEX]
        and not ext[Finger.MIDDLE]
        and not ext[Finger.RING]
        and not ext[Finger.PINKY]
    ):
        return HandShape.POINT_THUMB_OUT if ext[Finger.THUMB] else HandShape.POINT

    if all(ext.values()):
        tips = [hand.point(i) for i in FINGERTIPS]
        min_gap = min(
            dist2d(tips[i], tips[j]) for i in range(len(tips)) for j in range(i + 1, len(tips))
        )
        if min_gap > cfg.spread_gap_ratio * scale and (
            not cfg.require_palm_facing or _palm_toward_camera(hand)
        ):
            return HandShape.SPREAD

    return HandShape.OTHER


def _fingertip_circle(hand: HandFrame) -> Circle:
    tips = [hand.point(i) for i in FINGERTIPS]
    cx = sum(p.x for p in tips) / 5.0
    cy = sum(p.y for p in tips) / 5.0
    radius = max(
        math.sqrt((p.x - cx) * (p.x - cx) + (p.y - cy) * (p.y - cy)) for p in tips
    )
    return Circle(center=(cx, cy), radius=radius)


def marquee(hand: HandFrame, cfg: RecognizerConfig = DEFAULT_RECOGNIZER) -> Circle:
    """Circular coarse-selection region spanned by a spread hand."""
    if classify_shape(hand, cfg) is not HandShape.SPREAD:
        raise GesturePreconditionError("marquee requires a Spread hand")
    return _fingertip_circle(hand)


def _pinch_cursor(hand: HandFrame) -> tuple[float, float]:
    a = hand.point(THUMB_TIP)
    b = hand.point(INDEX_TIP)
    return ((a.x + b.x) / 2.0, (a.y + b.y) / 2.0)


def _palm_center(hand: HandFrame) -> tuple[float, float]:
    ids = (WRIST, INDEX_BASE, MIDDLE_BASE, RING_BASE, PINKY_BASE)
    x = sum(hand.point(i).x for i in ids) / len(ids)
    y = sum(hand.point(i).y for i in ids) / len(ids)
    return (x, y)


@dataclass
class _HandTrack:
    """Per-hand debounce, dwell, and tap bookkeeping."""

    shape: HandShape = HandShape.ABSENT
    shape_since_ms: int = 0          # first raw frame of the confirmed run
    raw_candidate: HandShape = HandShape.ABSENT
    raw_count: int = 0
    raw_since_ms: int = 0

    # Tap: Point -> PointThumbOut -> Point with a steady cursor.
    last_point_cursor: tuple[float, float] | None = None
    tap_anchor: tuple[float, float] | None = None
    tap_started_ms: int = 0
    tap_cancelled: bool = False

    spread_fired: bool = False
    pinch_active: bool = False
    pinch_begin_frame: int = -1      # frame index of the PinchBegin emission
    frame: HandFrame | None = None   # landmarks for the current packet


@dataclass
class RecognizerState:
    """Full mutable state of one participant's gesture stream."""

    participant: str
    hands: dict[Handedness, _HandTrack] = field(
        default_factory=lambda: {Handedness.LEFT: _HandTrack(), Handedness.RIGHT: _HandTrack()}
    )
    last_t_ms: int | None = None
    frame_no: int = -1

    mode: str | None = None          # None | "pan" | "zoom"
    pan_hand: Handedness | None = None
    pan_prev: tuple[float, float] | None = None
    zoom_since_ms: int | None = None
    zoom_d0: float = 0.0
    last_both_fist_end_ms: int | None = None
    connect_since_ms: int | None = None
    connect_fired: bool = False


class Recognizer:
    """Single-writer gesture recognizer for one participant's stream."""

    def __init__(self, participant: str, cfg: RecognizerConfig = DEFAULT_RECOGNIZER):
        self.cfg = cfg
        self.state = RecognizerState(participant=participant)

    # -- public API ---------------------------------------------------------

    def step(self, packet: FramePacket) -> list[GestureEvent]:
        """Advance the state machine by one frame, returning emitted events."""
        st = self.state
        if packet.participant != st.participant:
            raise SequencingError(
                f"packet for {packet.participant!r} fed to {st.participant!r}"
            )
        if st.last_t_ms is not None and packet.t_ms < st.last_t_ms:
            raise SequencingError(f"t_ms {packet.t_ms} precedes {st.last_t_ms}")
        st.last_t_ms = packet.t_ms
        st.frame_no += 1
        t = packet.t_ms

        events: list[GestureEvent] = []
        for side in (Handedness.LEFT, Handedness.RIGHT):
            self._debounce(side, packet.hand(side), t, events)
        self._bimanual(t, events)
        for side in (Handedness.LEFT, Handedness.RIGHT):
            self._per_frame(side, t, events)
        return events

    def finish(self, t_ms: int | None = None) -> list[GestureEvent]:
        """Close any open pinch/pan/zoom brackets, e.g. at end of a trace."""
        st = self.state
        t = t_ms if t_ms is not None else (st.last_t_ms or 0)
        events: list[GestureEvent] = []
        for side in (Handedness.LEFT, Handedness.RIGHT):
            track = st.hands[side]
            if track.pinch_active:
                events.append(self._event(t, side, GestureKind.PINCH_END))
                track.pinch_active = False
        if st.mode == "pan" and st.pan_hand is not None:
            events.append(self._event(t, st.pan_hand, GestureKind.PAN_END))
        elif st.mode == "zoom":
            events.append(self._event(t, Handedness.LEFT, GestureKind.ZOOM_END))
        st.mode = None
        st.pan_hand = None
        return events

    def dwell_progress(self, side: Handedness) -> float:
        """Dwell completion in [0, 1] for the hand's pending mode entry."""
        st = self.state
        t = st.last_t_ms
        if t is None:
            return 0.0
        track = st.hands[side]
        base: int | None = None
        if track.shape is HandShape.FIST:
            if st.mode in ("pan", "zoom"):
                return 1.0
            if self._both(HandShape.FIST):
                base = st.zoom_since_ms
            else:
                base = self._pan_base(side)
        elif track.shape is HandShape.SPREAD and not track.spread_fired:
            base = track.shape_since_ms
        elif track.shape is HandShape.PINCH and self._both(HandShape.PINCH):
            if st.connect_fired:
                return 1.0
            base = st.connect_since_ms
        if base is None:
            return 0.0
        return max(0.0, min(1.0, (t - base) / self.cfg.dwell_ms))

    # -- internals ----------------------------------------------------------

    def _event(
        self, t: int, hand: Handedness, kind: GestureKind, payload: dict | None = None
    ) -> GestureEvent:
        return GestureEvent(
            t_ms=t,
            participant=self.state.participant,
            hand=hand,
            kind=kind,
            payload=payload or {},
        )

    def _classify(self, frame: HandFrame | None) -> HandShape:
        if frame is None:
            return HandShape.ABSENT
        try:
            return classify_shape(frame, self.cfg)
        except DegenerateHandError:
            return HandShape.OTHER

    def _debounce(
        self,
        side: Handedness,
        frame: HandFrame | None,
        t: int,
        events: list[GestureEvent],
    ) -> None:
        track = self.state.hands[side]
        track.frame = frame
        raw = self._classify(frame)
        if raw == track.raw_candidate:
            track.raw_count += 1
        else:
            track.raw_candidate = raw
            track.raw_count = 1
            track.raw_since_ms = t
        if track.raw_count >= self.cfg.debounce_frames and raw != track.shape:
            self._transition(side, track, raw, track.raw_since_ms, t, events)

    def _transition(
        self,
        side: Handedness,
        track: _HandTrack,
        new: HandShape,
        since: int,
        t: int,
        events: list[GestureEvent],
    ) -> None:
        old = track.shape
        st = self.state

        if old is HandShape.PINCH and track.pinch_active:
            events.append(self._event(t, side, GestureKind.PINCH_END))
            track.pinch_active = False
            st.connect_since_ms = None
            st.connect_fired = False
        if old is HandShape.SPREAD:
            track.spread_fired = False

        # Tap detection across the Point -> PointThumbOut -> Point arc.
        if old is HandShape.POINT and new is HandShape.POINT_THUMB_OUT:
            track.tap_anchor = track.last_point_cursor
            track.tap_started_ms = since
            track.tap_cancelled = track.tap_anchor is None
        elif old is HandShape.POINT_THUMB_OUT:
            if (
                new is HandShape.POINT
                and not track.tap_cancelled
                and track.tap_anchor is not None
                and since - track.tap_started_ms <= self.cfg.tap_max_ms
            ):
                events.append(
                    self._event(
                        t,
                        side,
                        GestureKind.PERSIST_TAP,
                        {"cursor": list(track.tap_anchor)},
                    )
                )
            track.tap_anchor = None
            track.tap_cancelled = False

        if new is HandShape.PINCH:
            track.pinch_active = True
            track.pinch_begin_frame = st.frame_no
            cursor = _pinch_cursor(track.frame) if track.frame else (0.0, 0.0)
            events.append(
                self._event(t, side, GestureKind.PINCH_BEGIN, {"cursor": list(cursor)})
            )
        if new in _IDLE_SHAPES and old not in _IDLE_SHAPES:
            events.append(self._event(t, side, GestureKind.HAND_IDLE))

        track.shape = new
        track.shape_since_ms = since

    def _both(self, shape: HandShape) -> bool:
        hands = self.state.hands
        return (
            hands[Handedness.LEFT].shape is shape and hands[Handedness.RIGHT].shape is shape
        )

    def _pan_base(self, side: Handedness) -> int:
        st = self.state
        base = st.hands[side].shape_since_ms
        if st.last_both_fist_end_ms is not None:
            base = max(base, st.last_both_fist_end_ms)
        return base

    def _fist_pos(self, side: Handedness) -> tuple[float, float] | None:
        frame = self.state.hands[side].frame
        return _palm_center(frame) if frame is not None else None

    def _bimanual(self, t: int, events: list[GestureEvent]) -> None:
        st = self.state
        cfg = self.cfg
        both_fist = self._both(HandShape.FIST)

        # Close modes whose defining shapes were released or preempted.
        if st.mode == "pan":
            owner = st.pan_hand
            if owner is None or st.hands[owner].shape is not HandShape.FIST or both_fist:
                events.append(self._event(t, owner or Handedness.LEFT, GestureKind.PAN_END))
                st.mode = None
                st.pan_hand = None
                st.pan_prev = None
        if st.mode == "zoom" and not both_fist:
            events.append(self._event(t, Handedness.LEFT, GestureKind.ZOOM_END))
            st.mode = None

        # Zoom dwell while both fists are held; preempts pan.
        if both_fist:
            if st.zoom_since_ms is None:
                st.zoom_since_ms = max(
                    st.hands[Handedness.LEFT].shape_since_ms,
                    st.hands[Handedness.RIGHT].shape_since_ms,
                )
            if st.mode is None and t - st.zoom_since_ms >= cfg.dwell_ms:
                left = self._fist_pos(Handedness.LEFT)
                right = self._fist_pos(Handedness.RIGHT)
                if left is not None and right is not None:
                    dx = left[0] - right[0]
                    dy = left[1] - right[1]
                    st.mode = "zoom"
                    st.zoom_d0 = max(math.sqrt(dx * dx + dy * dy), 1e-9)
                    events.append(self._event(t, Handedness.LEFT, GestureKind.ZOOM_BEGIN))
            elif st.mode == "zoom":
                left = self._fist_pos(Handedness.LEFT)
                right = self._fist_pos(Handedness.RIGHT)
                if left is not None and right is not None:
                    dx = left[0] - right[0]
                    dy = left[1] - right[1]
                    d = math.sqrt(dx * dx + dy * dy)
                    factor = min(max(d / st.zoom_d0, cfg.zoom_min), cfg.zoom_max)
                    anchor = ((left[0] + right[0]) / 2.0, (left[1] + right[1]) / 2.0)
                    events.append(
                        self._event(
                            t,
                            Handedness.LEFT,
                            GestureKind.ZOOM_MOVE,
                            {"factor": factor, "anchor": list(anchor)},
                        )
                    )
        else:
            if st.zoom_since_ms is not None:
                st.last_both_fist_end_ms = t
            st.zoom_since_ms = None

        # Single-fist pan dwell and motion.
        if not both_fist and st.mode is None:
            for side in (Handedness.LEFT, Handedness.RIGHT):
                if st.hands[side].shape is not HandShape.FIST:
                    continue
                if t - self._pan_base(side) >= cfg.dwell_ms:
                    pos = self._fist_pos(side)
                    if pos is not None:
                        st.mode = "pan"
                        st.pan_hand = side
                        st.pan_prev = pos
                        events.append(self._event(t, side, GestureKind.PAN_BEGIN))
                break  # at most one lone fist can qualify
        if st.mode == "pan" and st.pan_hand is not None and st.pan_prev is not None:
            pos = self._fist_pos(st.pan_hand)
            if pos is not None and pos != st.pan_prev:
                delta = (
                    (pos[0] - st.pan_prev[0]) * cfg.pan_gain,
                    (pos[1] - st.pan_prev[1]) * cfg.pan_gain,
                )
                events.append(
                    self._event(
                        t, st.pan_hand, GestureKind.PAN_MOVE, {"delta": list(delta)}
                    )
                )
                st.pan_prev = pos

        # Two-handed pinch-and-hold connect.
        if self._both(HandShape.PINCH):
            if st.connect_since_ms is None:
                st.connect_since_ms = max(
                    st.hands[Handedness.LEFT].shape_since_ms,
                    st.hands[Handedness.RIGHT].shape_since_ms,
                )
            left_frame = st.hands[Handedness.LEFT].frame
            right_frame = st.hands[Handedness.RIGHT].frame
            if (
                not st.connect_fired
                and t - st.connect_since_ms >= cfg.dwell_ms
                and left_frame is not None
                and right_frame is not None
            ):
                st.connect_fired = True
                events.append(
                    self._event(
                        t,
                        Handedness.LEFT,
                        GestureKind.CONNECT_HOLD,
                        {
                            "cursor_a": list(_pinch_cursor(left_frame)),
                            "cursor_b": list(_pinch_cursor(right_frame)),
                        },
                    )
                )
        else:
            st.connect_since_ms = None
            st.connect_fired = False

    def _per_frame(self, side: Handedness, t: int, events: list[GestureEvent]) -> None:
        st = self.state
        track = st.hands[side]
        frame = track.frame
        if frame is None:
            return
        shape = track.shape

        if shape is HandShape.POINT:
            tip = frame.point(INDEX_TIP)
            cursor = (tip.x, tip.y)
            track.last_point_cursor = cursor
            events.append(
                self._event(t, side, GestureKind.EPHEMERAL_POINT, {"cursor": list(cursor)})
            )
        elif shape is HandShape.POINT_THUMB_OUT:
            # Cancel the tap if the index tip drifts off the anchor.
            if track.tap_anchor is not None and not track.tap_cancelled:
                tip = frame.point(INDEX_TIP)
                dx = tip.x - track.tap_anchor[0]
                dy = tip.y - track.tap_anchor[1]
                if math.sqrt(dx * dx + dy * dy) > self.cfg.tap_move_tolerance:
                    track.tap_cancelled = True
        elif shape is HandShape.SPREAD:
            circle = _fingertip_circle(frame)
            payload = {
                "center": list(circle.center),
                "radius": circle.radius,
                "persistent": False,
            }
            events.append(self._event(t, side, GestureKind.MARQUEE, payload))
            if not track.spread_fired and t - track.shape_since_ms >= self.cfg.dwell_ms:
                track.spread_fired = True
                events.append(
                    self._event(
                        t,
                        side,
                        GestureKind.MARQUEE,
                        {
                            "center": list(circle.center),
                            "radius": circle.radius,
                            "persistent": True,
                        },
                    )
                )
        elif shape is HandShape.PINCH and track.pinch_active:
            if st.frame_no != track.pinch_begin_frame:
                cursor = _pinch_cursor(frame)
                events.append(
                    self._event(t, side, GestureKind.PINCH_MOVE, {"cursor": list(cursor)})
                )


def step(state: Recognizer, packet: FramePacket) -> tuple[Recognizer, list[GestureEvent]]:
    """Functional wrapper over Recognizer.step for pipeline composition."""
    return state, state.step(packet)
