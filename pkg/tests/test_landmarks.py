from __future__ import annotations

import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pairviz import fixtures
from pairviz.landmarks import (
    LANDMARK_COUNT,
    FramePacket,
    HandFrame,
    Handedness,
    Landmark,
    TraceParseError,
    DegenerateHandError,
    hand_scale,
    load_trace,
    mirror,
    parse_trace_record,
    read_trace,
    serialize_trace_record,
)


def record(t_ms=1234, participant="A", hands=None) -> str:
    return json.dumps({"t_ms": t_ms, "participant": participant, "hands": hands or []})


def hand_obj(handedness="Right", n=LANDMARK_COUNT, coord=(0.5, 0.5, 0.0)) -> dict:
    return {"handedness": handedness, "landmarks": [list(coord)] * n}


def simple_hand(points: list[tuple[float, float]], handedness=Handedness.RIGHT) -> HandFrame:
    return HandFrame(
        handedness=handedness,
        points=tuple(Landmark(x, y, 0.0) for x, y in points),
    )


class TestParse:
    def test_empty_hands(self):
        packet = parse_trace_record(record())
        assert packet.t_ms == 1234
        assert packet.participant == "A"
        assert packet.hands == ()

    def test_single_right_hand(self):
        packet = parse_trace_record(record(hands=[hand_obj()]))
        assert len(packet.hands) == 1
        assert packet.hands[0].handedness is Handedness.RIGHT
        assert len(packet.hands[0].points) == 21

    def test_wrong_landmark_count(self):
        with pytest.raises(TraceParseError, match="landmarks: expected 21, got 20"):
            parse_trace_record(record(hands=[hand_obj(n=20)]))

    def test_invalid_json(self):
        with pytest.raises(TraceParseError, match="invalid JSON"):
            parse_trace_record("{not json")

    @pytest.mark.parametrize(
        "mutate,field",
        [
            (lambda o: o.pop("t_ms"), "t_ms"),
            (lambda o: o.update(t_ms="x"), "t_ms"),
            (lambda o: o.pop("participant"), "participant"),
            (lambda o: o.update(participant=""), "participant"),
            (lambda o: o.update(hands={}), "hands"),
        ],
    )
    def test_missing_or_bad_fields_name_the_field(self, mutate, field):
        obj = json.loads(record())
        mutate(obj)
        with pytest.raises(TraceParseError, match=field):
            parse_trace_record(json.dumps(obj))

    def test_unknown_handedness(self):
        with pytest.raises(TraceParseError, match="handedness"):
            parse_trace_record(record(hands=[hand_obj(handedness="Both")]))

    def test_duplicate_handedness(self):
        with pytest.raises(TraceParseError, match="duplicate"):
            parse_trace_record(record(hands=[hand_obj(), hand_obj()]))

    def test_non_finite_coordinate_names_field(self):
        hand = hand_obj()
        hand["landmarks"][5] = [float("nan"), 0.5, 0.0]
        with pytest.raises(TraceParseError, match=r"landmarks\[5\].x"):
            parse_trace_record(record(hands=[hand]))

    def test_slight_overshoot_accepted(self):
        hand = hand_obj(coord=(1.2, -0.2, 0.0))
        packet = parse_trace_record(record(hands=[hand]))
        assert len(packet.hands) == 1

    def test_far_excursion_drops_hand(self):
        hand = hand_obj()
        hand["landmarks"][0] = [1.5, 0.5, 0.0]
        packet = parse_trace_record(record(hands=[hand]))
        assert packet.hands == ()

    def test_three_hands_rejected(self):
        with pytest.raises(TraceParseError, match="hands"):
            parse_trace_record(
                record(hands=[hand_obj("Left"), hand_obj("Right"), hand_obj("Left")])
            )


class TestRoundTrip:
    @pytest.mark.parametrize(
        "name", ["tap_right.jsonl", "golden_a.jsonl", "golden_b.jsonl"]
    )
    def test_golden_traces_round_trip(self, name):
        with open(fixtures.path("traces", name), "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                assert serialize_trace_record(parse_trace_record(line)) == line


coords = st.floats(min_value=-0.25, max_value=1.25, allow_nan=False, width=32)
z_coords = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False, width=32)


@st.composite
def packets(draw):
    sides = draw(st.sampled_from([(), (Handedness.RIGHT,), (Handedness.LEFT, Handedness.RIGHT)]))
    hands = tuple(
        HandFrame(
            handedness=s,
            points=tuple(
                Landmark(draw(coords), draw(coords), draw(z_coords)) for _ in range(21)
            ),
        )
        for s in sides
    )
    return FramePacket(t_ms=draw(st.integers(0, 10**7)), participant="A", hands=hands)


class TestMirror:
    def test_definition(self):
        packet = parse_trace_record(record(hands=[hand_obj(coord=(0.3, 0.4, -0.1))]))
        mirrored = mirror(packet)
        p = mirrored.hands[0].points[0]
        assert p.x == pytest.approx(0.7)
        assert p.y == 0.4
        assert p.z == -0.1

    def test_fixed_point(self):
        packet = parse_trace_record(record(hands=[hand_obj(coord=(0.5, 0.1, 0.0))]))
        assert mirror(packet).hands[0].points[0].x == 0.5

    @given(packets())
    def test_involution(self, packet):
        twice = mirror(mirror(packet))
        for orig_hand, new_hand in zip(packet.hands, twice.hands):
            for a, b in zip(orig_hand.points, new_hand.points):
                assert b.x == pytest.approx(a.x, abs=1e-12)
                assert (b.y, b.z) == (a.y, a.z)

    def test_preserves_time_and_handedness(self):
        packet = parse_trace_record(record(t_ms=42, hands=[hand_obj("Left")]))
        mirrored = mirror(packet)
        assert mirrored.t_ms == 42
        assert mirrored.hands[0].handedness is Handedness.LEFT


class TestHandScale:
    def base_points(self) -> list[tuple[float, float]]:
        pts = [(0.45 + 0.005 * i, 0.5) for i in range(21)]
        pts[0] = (0.5, 0.9)
        pts[9] = (0.5, 0.7)
        return pts

    def test_distance(self):
        assert hand_scale(simple_hand(self.base_points())) == pytest.approx(0.2)

    def test_homogeneity(self):
        pts = self.base_points()
        doubled = [(0.3 + 2 * (x - 0.3), 0.1 + 2 * (y - 0.1)) for x, y in pts]
        assert hand_scale(simple_hand(doubled)) == pytest.approx(
            2 * hand_scale(simple_hand(pts))
        )

    def test_degenerate(self):
        pts = self.base_points()
        pts[9] = pts[0]
        with pytest.raises(DegenerateHandError):
            hand_scale(simple_hand(pts))

    @given(
        st.floats(-0.3, 0.3, allow_nan=False),
        st.floats(-0.3, 0.3, allow_nan=False),
        st.floats(0, 2 * math.pi, allow_nan=False),
    )
    def test_rigid_motion_invariance(self, tx, ty, theta):
        pts = self.base_points()
        cos_t, sin_t = math.cos(theta), math.sin(theta)
        moved = [
            (x * cos_t - y * sin_t + tx, x * sin_t + y * cos_t + ty) for x, y in pts
        ]
        assert abs(hand_scale(simple_hand(moved)) - hand_scale(simple_hand(pts))) <= 1e-9


class TestReadTrace:
    def test_monotonicity_enforced(self):
        lines = [record(t_ms=100), record(t_ms=99)]
        with pytest.raises(TraceParseError, match="precedes"):
            list(read_trace(lines))

    def test_per_participant_clocks_independent(self):
        lines = [record(t_ms=100, participant="A"), record(t_ms=50, participant="B")]
        assert len(list(read_trace(lines))) == 2

    def test_parse_errors_carry_line_numbers(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text(record() + "\n{broken\n", encoding="utf-8")
        with pytest.raises(TraceParseError, match="line 2"):
            load_trace(str(path))
