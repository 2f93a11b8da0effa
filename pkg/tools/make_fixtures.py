#!/usr/bin/env python3
"""Regenerate shipped fixtures: scenario files, golden traces, golden logs.

Run from the repo root after changing tracegen geometry or recognizer
semantics, then re-run the test suite:

    python3 tools/make_fixtures.py
"""
from __future__ import annotations

import json
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from pairviz import fixtures
from pairviz.harness import ReplayConfig, gen_flights, load_airports, replay
from pairviz.landmarks import Handedness, load_trace, mirror
from pairviz.recognizer import Recognizer, marquee
from pairviz.scene import project
from pairviz.tracegen import TraceBuilder, tap_sequence

FIX = os.path.join(os.path.dirname(__file__), "..", "src", "pairviz", "fixtures")

LEFT = Handedness.LEFT
RIGHT = Handedness.RIGHT


def write_json(name: str, obj) -> str:
    path = os.path.join(FIX, name)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")
    print(f"wrote {path}")
    return path


def make_scenarios(airports_rows: list[dict]) -> None:
    flights_scenario = {
        "name": "flight-planner",
        "airports": airports_rows,
        "elements": [
            {
                "id": "flight_list",
                "kind": "ListWidget",
                "x": 0.08,
                "y": 0.45,
                "radius": 0.1,
                "payload": {"rows_visible": 8},
            },
            {
                "id": "layer_switch",
                "kind": "SwitcherWidget",
                "x": 0.08,
                "y": 0.1,
                "radius": 0.04,
                "payload": {"options": ["airports", "routes", "both"], "option": "both"},
            },
        ],
        "edges": [],
    }
    write_json("flights.json", flights_scenario)

    nodes = {
        "n01": (0.2, 0.25),
        "n02": (0.35, 0.15),
        "n03": (0.5, 0.3),
        "n04": (0.65, 0.2),
        "n05": (0.8, 0.35),
        "n06": (0.25, 0.55),
        "n07": (0.45, 0.6),
        "n08": (0.6, 0.5),
        "n09": (0.75, 0.65),
        "n10": (0.4, 0.8),
    }
    tutor_scenario = {
        "name": "tutor-graph",
        "elements": [
            {"id": nid, "kind": "Node", "x": x, "y": y, "radius": 0.03, "payload": {}}
            for nid, (x, y) in nodes.items()
        ],
        "edges": [
            ["n01", "n02"],
            ["n02", "n03"],
            ["n03", "n04"],
            ["n04", "n05"],
            ["n01", "n06"],
            ["n06", "n07"],
            ["n07", "n08"],
            ["n08", "n05"],
            ["n03", "n08"],
            ["n07", "n10"],
        ],
    }
    write_json("tutor_graph.json", tutor_scenario)


def make_tap_trace() -> None:
    # Point 300 ms -> thumb out 150 ms -> point 300 ms, cursor held still.
    builder = TraceBuilder("A")
    tap_sequence(
        builder, RIGHT, (0.52, 0.31), start=9, point_frames=9, thumb_frames=5
    )
    builder.pad_to(40)
    builder.write(os.path.join(FIX, "traces", "tap_right.jsonl"))
    print("wrote traces/tap_right.jsonl")


def make_golden_traces() -> None:
    mad = project(40.47, -3.56)
    arn = project(59.65, 17.93)

    a = TraceBuilder("A")
    # Left-hand tap on Madrid, right-hand tap on Stockholm.
    tap_sequence(a, LEFT, mad, start=30, scale=0.08, point_frames=12, thumb_frames=5)
    tap_sequence(a, RIGHT, arn, start=70, scale=0.08, point_frames=12, thumb_frames=5)
    # Right-hand pinch drag over the flight list: scroll three rows up.
    a.hold(RIGHT, "pinch", (0.08, 0.45), 120, 12, scale=0.06)
    a.hold(RIGHT, "pinch", (0.08, 0.45), 132, 48, scale=0.06, drift=(0.0, -0.00125))
    # Left fist: dwell into pan, then drag the map right.
    a.hold(LEFT, "fist", (0.5, 0.7), 300, 31, scale=0.08)
    a.hold(LEFT, "fist", (0.5, 0.7), 331, 20, scale=0.08, drift=(0.002, 0.0))
    a.pad_to(400)
    a.write(os.path.join(FIX, "traces", "golden_a.jsonl"))

    b = TraceBuilder("B")
    # Left-hand tap cycles the layer switcher.
    tap_sequence(b, LEFT, (0.08, 0.1), start=30, scale=0.06, point_frames=12, thumb_frames=5)
    # Right-hand spread held over India: persistent coarse destination set.
    # Runs through frame 240 so that frame is a splayed golden frame.
    b.hold(RIGHT, "spread", (0.712, 0.39), 100, 150, scale=0.04)
    # Two-fist zoom: dwell, then separate the fists.
    b.hold(LEFT, "fist", (0.4, 0.55), 280, 31, scale=0.08)
    b.hold(RIGHT, "fist", (0.6, 0.55), 280, 31, scale=0.08)
    b.hold(LEFT, "fist", (0.4, 0.55), 311, 15, scale=0.08, drift=(-0.004, 0.0))
    b.hold(RIGHT, "fist", (0.6, 0.55), 311, 15, scale=0.08, drift=(0.004, 0.0))
    b.pad_to(400)
    b.write(os.path.join(FIX, "traces", "golden_b.jsonl"))
    print("wrote traces/golden_a.jsonl, traces/golden_b.jsonl")


def freeze_goldens() -> None:
    # Tap trace event log.
    recog = Recognizer("A")
    lines = []
    for packet in load_trace(os.path.join(FIX, "traces", "tap_right.jsonl")):
        for event in recog.step(mirror(packet)):
            lines.append(event.to_json())
    with open(os.path.join(FIX, "goldens", "tap_events.jsonl"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    taps = [ln for ln in lines if '"PersistTap"' in ln]
    assert len(taps) == 1, f"expected 1 tap, got {len(taps)}"
    print(f"wrote goldens/tap_events.jsonl ({len(lines)} events, 1 tap)")

    # Marquee circle at golden frame 240 of trace B.
    packets = load_trace(os.path.join(FIX, "traces", "golden_b.jsonl"))
    frame240 = mirror(packets[240])
    hand = frame240.hand(RIGHT)
    circle = marquee(hand)
    write_json(
        os.path.join("goldens", "marquee_frame240.json"),
        {"center": list(circle.center), "radius": circle.radius},
    )

    # Full golden replay: unified event log + snapshots.
    config = ReplayConfig(
        trace_a=os.path.join(FIX, "traces", "golden_a.jsonl"),
        trace_b=os.path.join(FIX, "traces", "golden_b.jsonl"),
        scenario=os.path.join(FIX, "flights.json"),
        seed=42,
        out_dir=os.path.join(FIX, "goldens", "replay"),
    )
    result = replay(config)
    assert result.converged(), "golden replay diverged"
    assert result.origins == {"MAD"}, f"origins {result.origins}"
    assert "ARN" in result.dests and len(result.dests) >= 2, f"dests {result.dests}"
    assert result.flights, "golden replay found no flights"
    kinds = {json.loads(ln)["kind"] for ln in result.event_lines}
    for needed in (
        "PersistTap",
        "Marquee",
        "PinchBegin",
        "PinchMove",
        "PinchEnd",
        "PanBegin",
        "PanMove",
        "PanEnd",
        "ZoomBegin",
        "ZoomMove",
        "ZoomEnd",
        "EphemeralPoint",
        "HandIdle",
    ):
        assert needed in kinds, f"golden replay missing {needed}"
    print(
        f"golden replay: {len(result.event_lines)} events, "
        f"origins={sorted(result.origins)}, dests={sorted(result.dests)}, "
        f"{len(result.flights)} flights"
    )


def tune_constraints() -> None:
    """Pick a study-style constraint pair with 1-3 solution itineraries."""
    airports = load_airports(os.path.join(FIX, "airports.json"))
    dataset = gen_flights(42, 2000, airports)
    origins = {"JFK", "BOS", "DCA"}
    dests = {"MAD", "LIS", "BCN", "CDG", "AMS"}
    pool = [
        f for f in dataset.flights if f.origin in origins and f.dest in dests
    ]
    print(f"constraint pool: {len(pool)} flights between the fixture sets")
    best = None
    for budget_a in range(300, 1400, 50):
        for lo in range(0, 40, 5):
            for span in (10, 15, 20):
                hi = lo + span
                for airlines_a, airlines_b in (
                    (("AA", "BX", "CJ", "DM"), ("BX", "CJ", "EV", "FZ")),
                    (("AA", "CJ", "EV", "GK"), ("CJ", "DM", "EV", "HQ")),
                ):
                    shared = set(airlines_a) & set(airlines_b)
                    sols = [
                        f
                        for f in pool
                        if f.cost <= min(budget_a, budget_a + 100)
                        and lo <= f.depart_day <= hi
                        and f.airline in shared
                    ]
                    if 1 <= len(sols) <= 3:
                        best = (budget_a, budget_a + 100, (lo, hi), airlines_a, airlines_b, sols)
                        if len(sols) == 3:
                            break
                if best and len(best[5]) == 3:
                    break
            if best and len(best[5]) == 3:
                break
        if best and len(best[5]) == 3:
            break
    assert best, "no constraint assignment found; adjust the search"
    budget_a, budget_b, window, airlines_a, airlines_b, sols = best
    fixture = {
        "a": {
            "budget_max": budget_a,
            "date_window": [window[0], window[1]],
            "airlines": sorted(airlines_a),
        },
        "b": {
            "budget_max": budget_b,
            "date_window": [window[0] - 5 if window[0] >= 5 else 0, window[1] + 5],
            "airlines": sorted(airlines_b),
        },
        "origins": sorted(origins),
        "dests": sorted(dests),
    }
    write_json("constraints.json", fixture)
    print(f"constraint fixture: {len(sols)} solutions -> {[f.to_obj() for f in sols]}")


def main() -> None:
    with open(os.path.join(FIX, "airports.json"), "r", encoding="utf-8") as fh:
        airports_rows = json.load(fh)
    make_scenarios(airports_rows)
    make_tap_trace()
    make_golden_traces()
    freeze_goldens()
    tune_constraints()


if __name__ == "__main__":
    main()
