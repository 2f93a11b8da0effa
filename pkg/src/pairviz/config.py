"""Tunable constants for gesture classification and scene interaction."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class RecognizerConfig:
    # Shape classification ratios, all relative to hand_scale or to the
    # wrist->middle-joint radius of the finger under test.
    extension_ratio: float = 1.3
    thumb_ratio: float = 0.7
    pinch_ratio: float = 0.25
    spread_gap_ratio: float = 0.25
    # Palm orientation is unreliable from a single camera; the pairwise
    # fingertip gap floor already rejects a closed raised hand.
    require_palm_facing: bool = False

    # State machine timing.
    debounce_frames: int = 3
    dwell_ms: int = 1000
    tap_max_ms: int = 400
    tap_move_tolerance: float = 0.02

    # Navigation.
    pan_gain: float = 1.0
    zoom_min: float = 0.25
    zoom_max: float = 8.0


@dataclass(frozen=True)
class SceneConfig:
    # One list row per this much vertical pinch travel, in scene units.
    scroll_row_units: float = 0.02
    histogram_bins: int = 10
    # Marquee membership rule: an element belongs to a coarse selection if
    # its center lies within the circle.
    marquee_rule: str = "center"


DEFAULT_RECOGNIZER = RecognizerConfig()
DEFAULT_SCENE = SceneConfig()
