"""Synthetic hand-landmark geometry and trace synthesis.

Builds plausible 21-point hands in shared scene coordinates for each
recognizable pose, anchored at a controllable point (index tip for
pointing, pinch midpoint for pinching, palm center for fists, fingertip
centroid for spreads). Trace records are written in raw camera space,
i.e. un-mirrored, so that ingestion-time mirroring lands the hands back
on the requested scene positions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .landmarks import (
    FramePacket,
    HandFrame,
    Handedness,
    Landmark,
    mirror,
    serialize_trace_record,
)

FPS = 30


def frame_ms(index: int) -> int:
    return index * 1000 // FPS


# Finger spray angles in degrees from straight up for a LEFT hand seen
# palm-to-camera in mirrored scene space (thumb toward -x); negated for a
# right hand, whose thumb lands toward +x after ingestion mirroring.
_ANGLES = (-60.0, -18.0, 0.0, 18.0, 36.0)
_THUMB_TUCK_ANGLE = -25.0  # curled thumb folds over the palm

# (base, middle, dip, tip) radii per finger in units of hand scale.
_EXTENDED = (1.0, 1.4, 1.7, 2.0)
_CURLED = (1.0, 1.0, 0.85, 0.7)
_THUMB_EXTENDED = (0.5, 0.9, 1.25, 1.6)
_THUMB_CURLED = (0.5, 0.55, 0.6, 0.65)

_Z = -0.05


def _finger_points(angle_deg: float, radii: tuple[float, ...], scale: float):
    a = math.radians(angle_deg)
    ux, uy = math.sin(a), -math.cos(a)
    return [(r * scale * ux, r * scale * uy) for r in radii]


def _build_local(pose: str, scale: float, handedness: Handedness) -> list[tuple[float, float]]:
    side = -1.0 if handedness is Handedness.RIGHT else 1.0

    ext = [True] * 5
    if pose == "fist":
        ext = [False] * 5
    elif pose == "point":
        ext = [False, True, False, False, False]
    elif pose == "point_thumb_out":
        ext = [True, True, False, False, False]
    elif pose in ("spread", "pinch", "claw"):
        pass
    else:
        raise ValueError(f"unknown pose {pose!r}")

    angles = []
    finger_radii = []
    for f in range(5):
        spray = _ANGLES[f]
        if f == 0:
            angles.append((spray if ext[0] else _THUMB_TUCK_ANGLE) * side)
            finger_radii.append(_THUMB_EXTENDED if ext[0] else _THUMB_CURLED)
        else:
            angles.append(spray * (0.15 if pose == "claw" else 1.0) * side)
            finger_radii.append(_EXTENDED if ext[f] else _CURLED)
    if pose == "claw":
        angles[0] = _ANGLES[0] * 0.15 * side

    points: list[tuple[float, float]] = [(0.0, 0.0)] * 21
    for f, (angle, radii) in enumerate(zip(angles, finger_radii)):
        joints = _finger_points(angle, radii, scale)
        base = 1 + f * 4
        for j, pt in enumerate(joints):
            points[base + j] = pt

    if pose == "pinch":
        # Close the thumb-index ring: both tips meet near the index line.
        a = math.radians(angles[1])
        ux, uy = math.sin(a), -math.cos(a)
        tip = (1.7 * scale * ux, 1.7 * scale * uy)
        points[8] = tip
        points[4] = (tip[0] + 0.04 * scale, tip[1] + 0.03 * scale)
    return points


def _pose_anchor(pose: str, points: list[tuple[float, float]]) -> tuple[float, float]:
    if pose in ("point", "point_thumb_out"):
        return points[8]
    if pose == "pinch":
        return ((points[4][0] + points[8][0]) / 2.0, (points[4][1] + points[8][1]) / 2.0)
    if pose == "fist":
        ids = (0, 5, 9, 13, 17)
        return (sum(points[i][0] for i in ids) / 5.0, sum(points[i][1] for i in ids) / 5.0)
    # spread / claw: fingertip centroid
    tips = (4, 8, 12, 16, 20)
    return (sum(points[i][0] for i in tips) / 5.0, sum(points[i][1] for i in tips) / 5.0)


def make_hand(
    pose: str,
    anchor: tuple[float, float],
    scale: float = 0.1,
    handedness: Handedness = Handedness.RIGHT,
) -> HandFrame:
    """A synthetic hand in scene coordinates with its anchor point placed."""
    points = _build_local(pose, scale, handedness)
    ax, ay = _pose_anchor(pose, points)
    dx, dy = anchor[0] - ax, anchor[1] - ay
    return HandFrame(
        handedness=handedness,
        points=tuple(Landmark(x + dx, y + dy, _Z) for x, y in points),
    )


@dataclass
class TraceBuilder:
    """Frame-indexed two-hand timeline for one participant."""

    participant: str
    frames: dict[int, dict[Handedness, HandFrame]] = field(default_factory=dict)
    length: int = 0

    def hold(
        self,
        side: Handedness,
        pose: str,
        anchor: tuple[float, float],
        start: int,
        count: int,
        scale: float = 0.1,
        drift: tuple[float, float] = (0.0, 0.0),
    ) -> "TraceBuilder":
        """Hold a pose for `count` frames, drifting the anchor per frame."""
        for i in range(count):
            frame = start + i
            pos = (anchor[0] + drift[0] * i, anchor[1] + drift[1] * i)
            self.frames.setdefault(frame, {})[side] = make_hand(pose, pos, scale, side)
            self.length = max(self.length, frame + 1)
        return self

    def pad_to(self, frame_count: int) -> "TraceBuilder":
        self.length = max(self.length, frame_count)
        return self

    def packets(self) -> list[FramePacket]:
        """Scene-space packets, one per frame, empty frames included."""
        out = []
        for i in range(self.length):
            hands = self.frames.get(i, {})
            ordered = tuple(
                hands[s] for s in (Handedness.LEFT, Handedness.RIGHT) if s in hands
            )
            out.append(
                FramePacket(t_ms=frame_ms(i), participant=self.participant, hands=ordered)
            )
        return out

    def lines(self) -> list[str]:
        """Raw trace records (camera space: x un-mirrored)."""
        return [serialize_trace_record(mirror(p)) for p in self.packets()]

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for line in self.lines():
                fh.write(line + "\n")


def tap_sequence(
    builder: TraceBuilder,
    side: Handedness,
    anchor: tuple[float, float],
    start: int,
    scale: float = 0.1,
    point_frames: int = 12,
    thumb_frames: int = 5,
) -> int:
    """Point, flick the thumb out, and return: one persistent tap.

    Returns the first frame index after the sequence.
    """
    builder.hold(side, "point", anchor, start, point_frames, scale)
    builder.hold(side, "point_thumb_out", anchor, start + point_frames, thumb_frames, scale)
    builder.hold(
        side, "point", anchor, start + point_frames + thumb_frames, point_frames, scale
    )
    return start + 2 * point_frames + thumb_frames
