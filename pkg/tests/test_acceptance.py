"""Acceptance suite: one test per release criterion, each printing a
pass line with its measured numbers. Run with `pytest tests/test_acceptance.py -v -s`.
"""
from __future__ import annotations

import json
import math
import random
import time

from pairviz import fixtures
from pairviz.cli import main as cli_main
from pairviz.config import RecognizerConfig
from pairviz.harness import (
    ReplayConfig,
    gen_flights,
    load_airports,
    load_constraint_fixture,
    replay,
    solve_itineraries,
)
from pairviz.landmarks import Handedness, load_trace, mirror
from pairviz.net import Error, Join, Op, ReorderBuffer, SessionCore, Snapshot
from pairviz.recognizer import Circle, GestureKind, Recognizer
from pairviz.replica import Document, ReplicaOp
from pairviz.scene import (
    Element,
    ElementKind,
    Graph,
    connections_between,
    histogram,
    hit_test_circle,
    hit_test_point,
    query_flights,
    shortest_path,
)
from pairviz.tracegen import TraceBuilder, frame_ms

LEFT = Handedness.LEFT
RIGHT = Handedness.RIGHT

DWELL_TOL_MS = 34


def announce(name: str, detail: str) -> None:
    print(f"[PASS] {name}: {detail}")


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


def run_trace(builder: TraceBuilder, participant="A"):
    recog = Recognizer(participant)
    events = []
    for packet in builder.packets():
        events.extend(recog.step(packet))
    return events


def test_gesture_dwell():
    """No mode event before 1000 ms of held shape; entry within one frame."""
    mode_kinds = {
        GestureKind.PAN_BEGIN,
        GestureKind.PAN_MOVE,
        GestureKind.ZOOM_BEGIN,
        GestureKind.ZOOM_MOVE,
        GestureKind.CONNECT_HOLD,
    }

    def mode_events(events):
        out = [e for e in events if e.kind in mode_kinds]
        out += [
            e
            for e in events
            if e.kind is GestureKind.MARQUEE and e.payload.get("persistent")
        ]
        return out

    cases = []
    for start in (0, 5, 17):
        pan = TraceBuilder("A")
        pan.hold(RIGHT, "fist", (0.5, 0.5), start, 45)
        pan.pad_to(start + 50)
        cases.append(("pan", start, pan, GestureKind.PAN_BEGIN))

        zoom = TraceBuilder("A")
        zoom.hold(LEFT, "fist", (0.35, 0.5), start, 45)
        zoom.hold(RIGHT, "fist", (0.65, 0.5), start, 45)
        zoom.pad_to(start + 50)
        cases.append(("zoom", start, zoom, GestureKind.ZOOM_BEGIN))

        spread = TraceBuilder("A")
        spread.hold(RIGHT, "spread", (0.5, 0.5), start, 45)
        spread.pad_to(start + 50)
        cases.append(("marquee", start, spread, None))

        connect = TraceBuilder("A")
        connect.hold(LEFT, "pinch", (0.3, 0.5), start, 45)
        connect.hold(RIGHT, "pinch", (0.7, 0.5), start, 45)
        connect.pad_to(start + 50)
        cases.append(("connect", start, connect, GestureKind.CONNECT_HOLD))

    with Timer() as timer:
        worst_lag = 0
        for name, start, builder, entry_kind in cases:
            events = run_trace(builder)
            shape_start = frame_ms(start)
            threshold = shape_start + 1000
            modes = mode_events(events)
            early = [e for e in modes if e.t_ms < threshold]
            assert not early, f"{name}: mode event before dwell at {early[0].t_ms}"
            if entry_kind is None:
                entries = [
                    e
                    for e in events
                    if e.kind is GestureKind.MARQUEE and e.payload.get("persistent")
                ]
            else:
                entries = [e for e in events if e.kind is entry_kind]
            assert len(entries) == 1, f"{name}: expected 1 entry, got {len(entries)}"
            lag = entries[0].t_ms - threshold
            assert 0 <= lag <= DWELL_TOL_MS, f"{name}: entry lag {lag} ms"
            worst_lag = max(worst_lag, lag)

        # Sub-dwell holds must stay silent.
        short = TraceBuilder("A")
        short.hold(RIGHT, "fist", (0.5, 0.5), 0, 28)  # 900 ms
        short.hold(RIGHT, "claw", (0.5, 0.5), 28, 6)
        short.pad_to(40)
        assert not mode_events(run_trace(short))

    assert timer.elapsed < 1.0, f"runtime {timer.elapsed:.2f}s"
    announce(
        "gesture dwell",
        f"{len(cases)} traces, worst entry lag {worst_lag} ms <= {DWELL_TOL_MS} ms, "
        f"runtime {timer.elapsed:.2f}s < 1s",
    )


def test_tap_semantics():
    """The golden tap trace yields one PersistTap at the pre-tap cursor."""
    with Timer() as timer:
        recog = Recognizer("A")
        events = []
        for packet in load_trace(fixtures.path("traces", "tap_right.jsonl")):
            events.extend(recog.step(mirror(packet)))
        taps = [e for e in events if e.kind is GestureKind.PERSIST_TAP]
        assert len(taps) == 1, f"expected 1 tap, got {len(taps)}"
        pre_tap_points = [
            e
            for e in events
            if e.kind is GestureKind.EPHEMERAL_POINT and e.t_ms < taps[0].t_ms
        ]
        assert taps[0].payload["cursor"] == pre_tap_points[-1].payload["cursor"]
    assert timer.elapsed < 1.0
    announce(
        "tap semantics",
        f"1 PersistTap, cursor exactly equals pre-tap cursor, "
        f"runtime {timer.elapsed:.2f}s < 1s",
    )


def test_zoom_ratio():
    """Doubling inter-fist distance doubles the factor; clamps hold."""
    builder = TraceBuilder("A")
    builder.hold(LEFT, "fist", (0.4, 0.5), 0, 31)
    builder.hold(RIGHT, "fist", (0.6, 0.5), 0, 31)
    builder.hold(LEFT, "fist", (0.4, 0.5), 31, 21, drift=(-0.005, 0.0))
    builder.hold(RIGHT, "fist", (0.6, 0.5), 31, 21, drift=(0.005, 0.0))
    builder.pad_to(60)
    events = run_trace(builder)
    moves = [e for e in events if e.kind is GestureKind.ZOOM_MOVE]
    final = moves[-1].payload["factor"]
    assert abs(final - 2.0) <= 1e-9, f"factor {final}"

    cfg = RecognizerConfig()
    wide = TraceBuilder("A")
    wide.hold(LEFT, "fist", (0.49, 0.5), 0, 31, scale=0.03)
    wide.hold(RIGHT, "fist", (0.51, 0.5), 0, 31, scale=0.03)
    wide.hold(LEFT, "fist", (0.49, 0.5), 31, 31, scale=0.03, drift=(-0.013, 0.0))
    wide.hold(RIGHT, "fist", (0.51, 0.5), 31, 31, scale=0.03, drift=(0.013, 0.0))
    wide.pad_to(70)
    factors = [
        e.payload["factor"] for e in run_trace(wide) if e.kind is GestureKind.ZOOM_MOVE
    ]
    assert max(factors) == cfg.zoom_max == 8.0
    assert all(0.25 <= f <= 8.0 for f in factors)

    # Shrinking to nothing pins the factor at the lower clamp.
    narrow = TraceBuilder("A")
    narrow.hold(LEFT, "fist", (0.2, 0.5), 0, 31, scale=0.05)
    narrow.hold(RIGHT, "fist", (0.8, 0.5), 0, 31, scale=0.05)
    narrow.hold(LEFT, "fist", (0.2, 0.5), 31, 31, scale=0.05, drift=(0.0145, 0.0))
    narrow.hold(RIGHT, "fist", (0.8, 0.5), 31, 31, scale=0.05, drift=(-0.0145, 0.0))
    narrow.pad_to(70)
    factors = [
        e.payload["factor"] for e in run_trace(narrow) if e.kind is GestureKind.ZOOM_MOVE
    ]
    assert min(factors) == cfg.zoom_min == 0.25
    announce(
        "zoom ratio",
        f"distance doubling -> factor {final:.12f} (|err| <= 1e-9), "
        f"clamped to [0.25, 8]",
    )


def test_crdt_convergence():
    """1000 shuffled two-replica deliveries converge byte-identically."""
    with Timer() as timer:
        rng = random.Random(20240809)
        pair_space = [(c, r) for c in range(1, 120) for r in ("A", "B", "C")]
        for trial in range(1000):
            n_ops = rng.randint(1, 200)
            pairs = rng.sample(pair_space, n_ops)
            ops = [
                ReplicaOp(
                    key=f"k{rng.randint(0, 24)}",
                    value=rng.randint(0, 10**9),
                    clock=c,
                    replica=r,
                )
                for c, r in pairs
            ]
            first = list(ops)
            second = list(ops)
            rng.shuffle(first)
            rng.shuffle(second)
            one, two = Document("X"), Document("Y")
            for op in first:
                one.apply_remote(op)
            for op in second:
                two.apply_remote(op)
            assert one.canonical_json() == two.canonical_json(), f"trial {trial}"

        # Pairwise idempotence + commutativity on random op pairs.
        for _ in range(500):
            (c1, r1), (c2, r2) = rng.sample(pair_space, 2)
            op_a = ReplicaOp(key="k", value=rng.randint(0, 99), clock=c1, replica=r1)
            op_b = ReplicaOp(key="k", value=rng.randint(0, 99), clock=c2, replica=r2)
            d1, d2 = Document("X"), Document("Y")
            d1.apply_remote(op_a)
            assert not d1.apply_remote(op_a)  # idempotent
            d1.apply_remote(op_b)
            d2.apply_remote(op_b)
            d2.apply_remote(op_a)
            assert d1.canonical_json() == d2.canonical_json()
    assert timer.elapsed < 30.0
    announce(
        "crdt convergence",
        f"1000 interleavings (<= 200 ops) byte-identical; 500 pairwise "
        f"idempotence/commutativity checks, runtime {timer.elapsed:.1f}s < 30s",
    )


def test_hit_test_and_query_oracles():
    """Each query op matches an independent brute force on >= 100 instances."""
    with Timer() as timer:
        rng = random.Random(31337)
        elements = [
            Element(
                id=f"e{i:03d}",
                kind=ElementKind.NODE,
                x=rng.uniform(0, 1),
                y=rng.uniform(0, 1),
                radius=rng.uniform(0.005, 0.08),
            )
            for i in range(500)
        ]
        for _ in range(120):
            cursor = (rng.uniform(0, 1), rng.uniform(0, 1))
            qualified = [
                (math.dist(cursor, (el.x, el.y)), el.id)
                for el in elements
                if math.dist(cursor, (el.x, el.y)) <= el.radius
            ]
            expected = min(qualified)[1] if qualified else None
            assert hit_test_point(elements, cursor) == expected

        for _ in range(120):
            circle = Circle(
                (rng.uniform(0, 1), rng.uniform(0, 1)), rng.uniform(0.01, 0.4)
            )
            expected = {
                el.id
                for el in elements
                if math.dist(circle.center, (el.x, el.y)) <= circle.radius
            }
            assert hit_test_circle(elements, circle) == expected

        dataset = gen_flights(42, 2000, load_airports(fixtures.path("airports.json")))
        codes = sorted(dataset.airports)
        for _ in range(120):
            origins = set(rng.sample(codes, rng.randint(1, 8)))
            dests = set(rng.sample(codes, rng.randint(1, 8)))
            expected = sorted(
                (f for f in dataset.flights if f.origin in origins and f.dest in dests),
                key=lambda f: (f.cost, f.depart_day, f.origin, f.dest),
            )
            assert query_flights(dataset, origins, dests) == expected

        for _ in range(120):
            nodes = [f"n{i:02d}" for i in range(rng.randint(2, 40))]
            edges = set()
            for _ in range(rng.randint(0, 60)):
                a, b = rng.sample(nodes, 2)
                edges.add((min(a, b), max(a, b)))
            graph = Graph(nodes, edges)
            sel_a = {n for n in nodes if rng.random() < 0.4}
            sel_b = {n for n in nodes if rng.random() < 0.4}
            expected_links = set()
            for a, b in edges:
                if (a in sel_a and b in sel_b) or (b in sel_a and a in sel_b):
                    expected_links.add((a, b))
            assert connections_between(graph, sel_a, sel_b) == expected_links

            src, dst = rng.sample(nodes, 2)
            # Oracle: layered BFS distance, independent of the path routine.
            dist = {src: 0}
            frontier = [src]
            while frontier:
                nxt = []
                for u in frontier:
                    for v in graph.neighbors(u):
                        if v not in dist:
                            dist[v] = dist[u] + 1
                            nxt.append(v)
                frontier = nxt
            path = shortest_path(graph, src, dst)
            if dst not in dist:
                assert path is None
            else:
                assert path is not None and len(path) - 1 == dist[dst]
                assert path[0] == src and path[-1] == dst
                assert all(
                    (min(u, v), max(u, v)) in graph.edges for u, v in zip(path, path[1:])
                )

        for _ in range(120):
            values = [rng.uniform(-50, 50) for _ in range(rng.randint(1, 400))]
            bins = rng.randint(1, 25)
            lo, hi = min(values), max(values)
            expected_counts = [0] * bins
            for v in values:
                if hi == lo:
                    idx = bins - 1
                else:
                    idx = min(int((v - lo) / ((hi - lo) / bins)), bins - 1)
                expected_counts[idx] += 1
            assert histogram(values, bins) == expected_counts
    assert timer.elapsed < 30.0
    announce(
        "hit-test and query oracles",
        f"6 operations x 120 random instances match brute force, "
        f"runtime {timer.elapsed:.1f}s < 30s",
    )


def test_dataset_generation(tmp_path):
    """gen-data --seed 42 --flights 2000: valid, byte-identical; fixture solvable."""
    with Timer() as timer:
        out1, out2 = tmp_path / "d1.json", tmp_path / "d2.json"
        for out in (out1, out2):
            assert (
                cli_main(
                    ["gen-data", "--seed", "42", "--flights", "2000", "--out", str(out)]
                )
                == 0
            )
        assert out1.read_bytes() == out2.read_bytes()
        data = json.loads(out1.read_text())
        assert len(data["flights"]) == 2000
        airports = data["airports"]
        for f in data["flights"]:
            assert f["origin"] != f["dest"]
            assert f["origin"] in airports and f["dest"] in airports
            assert f["cost"] > 0 and f["duration_min"] > 0

        dataset = gen_flights(42, 2000, load_airports(fixtures.path("airports.json")))
        ca, cb, origins, dests = load_constraint_fixture(fixtures.path("constraints.json"))
        solutions = solve_itineraries(dataset, ca, cb, origins, dests)
        brute = [
            f
            for f in sorted(
                dataset.flights, key=lambda f: (f.cost, f.depart_day, f.origin, f.dest)
            )
            if f.origin in origins
            and f.dest in dests
            and f.cost <= min(ca.budget_max, cb.budget_max)
            and max(ca.date_window[0], cb.date_window[0])
            <= f.depart_day
            <= min(ca.date_window[1], cb.date_window[1])
            and f.airline in (ca.airlines & cb.airlines)
        ]
        assert solutions == brute
        assert 1 <= len(solutions) <= 3
    announce(
        "dataset",
        f"2000 valid flights byte-identical across runs; constraint fixture "
        f"yields {len(solutions)} solution(s) matching brute force, "
        f"runtime {timer.elapsed:.1f}s",
    )


def test_end_to_end_replay():
    """Golden replay: converged snapshots, stable bytes, oracle flight list."""
    with Timer() as timer:
        config = ReplayConfig(
            trace_a=fixtures.path("traces", "golden_a.jsonl"),
            trace_b=fixtures.path("traces", "golden_b.jsonl"),
            scenario=fixtures.path("flights.json"),
            seed=42,
        )
        first = replay(config)
        second = replay(config)
        assert first.converged(), "snapshot(A) != snapshot(B)"
        assert first.event_lines == second.event_lines
        assert (first.snapshot_a, first.snapshot_b) == (
            second.snapshot_a,
            second.snapshot_b,
        )
        dataset = gen_flights(42, 2000, load_airports(fixtures.path("airports.json")))
        oracle = sorted(
            (
                f
                for f in dataset.flights
                if f.origin in first.origins and f.dest in first.dests
            ),
            key=lambda f: (f.cost, f.depart_day, f.origin, f.dest),
        )
        assert first.flights == oracle
        assert first.flights, "golden replay selected no flights"
    assert timer.elapsed < 10.0
    announce(
        "end-to-end replay",
        f"snapshots equal, {len(first.event_lines)} events byte-identical across "
        f"runs, flight list matches oracle ({len(first.flights)} flights), "
        f"runtime {timer.elapsed:.1f}s < 10s",
    )


def test_relay_protocol():
    """FIFO per sender, late-join snapshot oracle, session_full on third join."""
    core = SessionCore("s")
    core.handle("c1", Join(session="s", participant="A", replica="A"), 0)
    oracle = Document("oracle")
    sent = []
    for i in range(50):
        op = ReplicaOp(key=f"k{i % 7}", value=i, clock=i + 1, replica="A")
        oracle.apply_remote(op)
        sent.append(op)
        core.handle("c1", Op(op=op), 0)

    deliveries = core.handle("c2", Join(session="s", participant="B", replica="B"), 0)
    snapshot = deliveries[0][1]
    assert isinstance(snapshot, Snapshot)
    late = Document("late")
    late.merge_snapshot(list(snapshot.entries))
    assert late.canonical_json() == oracle.canonical_json()

    rejected = core.handle("c3", Join(session="s", participant="C", replica="C"), 0)
    assert rejected == [("c3", Error(code="session_full"))]

    # Interleaved senders: each receiver sees the peer's ops in send order.
    rng = random.Random(77)
    buffer = ReorderBuffer(rng)
    sent_by = {"c1": [], "c2": []}
    for i in range(300):
        conn = "c1" if rng.random() < 0.5 else "c2"
        op = ReplicaOp(key=f"x{i}", value=i, clock=100 + i, replica=conn)
        sent_by[conn].append(op)
        buffer.push(conn, Op(op=op))
    received = {"c1": [], "c2": []}
    for sender, message in buffer.drain():
        for target, out in core.handle(sender, message, 0):
            received[target].append(out.op)
    assert received["c2"] == sent_by["c1"]
    assert received["c1"] == sent_by["c2"]
    announce(
        "relay protocol",
        "per-sender FIFO preserved over 300 interleaved ops; late-join snapshot "
        "equals replica merge; third join rejected with session_full",
    )
