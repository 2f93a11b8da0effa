from __future__ import annotations

import asyncio
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pairviz.net import (
    Error,
    InProcessHub,
    Join,
    Leave,
    Op,
    Presence,
    RelayClient,
    RelayServer,
    ReorderBuffer,
    SessionCore,
    Snapshot,
    decode,
    encode,
)
from pairviz.replica import Document, ReplicaOp

json_scalars = st.one_of(
    st.none(),
    st.booleans(),
    st.integers(-(10**9), 10**9),
    st.floats(allow_nan=False, allow_infinity=False, width=32),
    st.text(max_size=20),
)
json_values = st.one_of(
    json_scalars,
    st.lists(json_scalars, max_size=4),
    st.dictionaries(st.text(max_size=8), json_scalars, max_size=4),
)
replica_ops = st.builds(
    ReplicaOp,
    key=st.text(min_size=1, max_size=20),
    value=json_values,
    clock=st.integers(1, 10**6),
    replica=st.text(min_size=1, max_size=8),
)
messages = st.one_of(
    st.builds(
        Join,
        session=st.text(min_size=1, max_size=10),
        participant=st.text(min_size=1, max_size=10),
        replica=st.text(min_size=1, max_size=10),
    ),
    st.builds(Snapshot, entries=st.lists(replica_ops, max_size=5).map(tuple)),
    st.builds(Op, op=replica_ops),
    st.builds(
        Presence,
        participant=st.text(min_size=1, max_size=10),
        seq=st.integers(0, 10**6),
        t_ms=st.integers(0, 10**9),
        payload=st.dictionaries(st.text(max_size=8), json_scalars, max_size=4),
    ),
    st.builds(Leave, participant=st.text(min_size=1, max_size=10)),
    st.builds(Error, code=st.text(min_size=1, max_size=10), detail=st.text(max_size=20)),
)


class TestCodec:
    @given(messages)
    def test_round_trip(self, message):
        assert decode(encode(message)) == message

    def test_decode_op_schema(self):
        message = decode('{"type":"op","key":"viewport/scale","value":2,"clock":3,"replica":"A"}')
        assert isinstance(message, Op)
        assert message.op == ReplicaOp(key="viewport/scale", value=2, clock=3, replica="A")

    def test_decode_bogus_type(self):
        message = decode('{"type":"bogus"}')
        assert isinstance(message, Error)
        assert message.code == "malformed"

    def test_decode_missing_field(self):
        message = decode('{"type":"join","session":"s"}')
        assert isinstance(message, Error)
        assert message.code == "malformed"

    def test_decode_bad_json(self):
        message = decode("{nope")
        assert isinstance(message, Error)
        assert message.code == "malformed"

    def test_unknown_fields_ignored(self):
        message = decode('{"type":"leave","participant":"A","extra":42}')
        assert message == Leave(participant="A")


def join(core: SessionCore, conn: str, participant: str, now=0):
    return core.handle(conn, Join(session=core.session_id, participant=participant, replica=participant), now)


class TestSessionCore:
    def test_first_join_gets_empty_snapshot(self):
        core = SessionCore("s")
        deliveries = join(core, "c1", "A")
        assert deliveries == [("c1", Snapshot(entries=()))]

    def test_late_joiner_snapshot_equals_replica_merge(self):
        core = SessionCore("s")
        join(core, "c1", "A")
        oracle = Document("oracle")
        for i in range(5):
            op = ReplicaOp(key=f"k{i % 3}", value=i, clock=i + 1, replica="A")
            oracle.apply_remote(op)
            core.handle("c1", Op(op=op), 0)
        deliveries = join(core, "c2", "B")
        snapshot = deliveries[0][1]
        assert isinstance(snapshot, Snapshot)
        merged = Document("check")
        merged.merge_snapshot(list(snapshot.entries))
        assert merged.canonical_json() == oracle.canonical_json()

    def test_third_join_rejected(self):
        core = SessionCore("s")
        join(core, "c1", "A")
        join(core, "c2", "B")
        deliveries = join(core, "c3", "C")
        assert deliveries == [("c3", Error(code="session_full"))]

    def test_rejoin_same_participant_allowed(self):
        core = SessionCore("s")
        join(core, "c1", "A")
        join(core, "c2", "B")
        deliveries = join(core, "c3", "A")  # A reconnects on a fresh socket
        assert isinstance(deliveries[0][1], Snapshot)
        assert core.participants() == {"A", "B"}

    def test_op_before_join(self):
        core = SessionCore("s")
        deliveries = core.handle("c1", Op(op=ReplicaOp("k", 1, 1, "A")), 0)
        assert deliveries == [("c1", Error(code="not_joined"))]

    def test_ops_forwarded_to_peer_only(self):
        core = SessionCore("s")
        join(core, "c1", "A")
        join(core, "c2", "B")
        op = Op(op=ReplicaOp("k", 1, 1, "A"))
        assert core.handle("c1", op, 0) == [("c2", op)]

    def test_presence_never_mutates_document(self):
        core = SessionCore("s")
        join(core, "c1", "A")
        join(core, "c2", "B")
        before = core.doc.canonical_json()
        for seq in range(10):
            core.handle(
                "c1",
                Presence(participant="A", seq=seq, t_ms=seq * 40, payload={"x": seq}),
                now_ms=seq * 40,
            )
        assert core.doc.canonical_json() == before

    def test_presence_throttled_newest_wins(self):
        core = SessionCore("s")
        join(core, "c1", "A")
        join(core, "c2", "B")
        sent = core.handle("c1", Presence("A", 1, 0, {"n": 1}), now_ms=1000)
        assert len(sent) == 1
        assert core.handle("c1", Presence("A", 2, 10, {"n": 2}), now_ms=1010) == []
        assert core.handle("c1", Presence("A", 3, 20, {"n": 3}), now_ms=1020) == []
        flushed = core.flush_presence(now_ms=1040)
        assert len(flushed) == 1
        assert flushed[0][1].payload == {"n": 3}

    def test_leave_notifies_peer(self):
        core = SessionCore("s")
        join(core, "c1", "A")
        join(core, "c2", "B")
        deliveries = core.handle("c1", Leave(participant="A"), 0)
        assert deliveries == [("c2", Leave(participant="A"))]
        assert core.participants() == {"B"}

    def test_per_sender_fifo_under_interleaving(self):
        core = SessionCore("s")
        join(core, "c1", "A")
        join(core, "c2", "B")
        rng = random.Random(11)
        sent_a, sent_b, received_by = [], [], {"c1": [], "c2": []}
        buffer = ReorderBuffer(rng)
        for i in range(200):
            sender, log = ("c1", sent_a) if rng.random() < 0.5 else ("c2", sent_b)
            op = ReplicaOp(key=f"k{i}", value=i, clock=i + 1, replica=sender)
            log.append(op)
            buffer.push(sender, Op(op=op))
        # Interleave the two senders' streams in a random but FIFO-safe order.
        for sender, message in buffer.drain():
            for target, out in core.handle(sender, message, 0):
                received_by[target].append(out.op)
        assert received_by["c2"] == sent_a  # A's order preserved at B
        assert received_by["c1"] == sent_b  # B's order preserved at A


class TestReorderBuffer:
    def test_preserves_per_sender_order(self):
        rng = random.Random(5)
        buffer = ReorderBuffer(rng)
        for i in range(50):
            buffer.push("A", i)
            buffer.push("B", 100 + i)
        drained = buffer.drain()
        a_stream = [m for s, m in drained if s == "A"]
        b_stream = [m for s, m in drained if s == "B"]
        assert a_stream == list(range(50))
        assert b_stream == list(range(100, 150))
        assert [s for s, _ in drained] != ["A"] * 50 + ["B"] * 50  # actually interleaved


class TestInProcessHub:
    def test_two_clients_converge(self):
        hub = InProcessHub("t")
        docs = {"A": Document("A"), "B": Document("B")}
        conns = {}
        for name in ("A", "B"):
            conn = hub.connect()
            hub.send(conn, Join(session="t", participant=name, replica=name))
            conns[name] = conn
        rng = random.Random(3)
        for i in range(300):
            name = rng.choice(["A", "B"])
            op = docs[name].local_set(f"k{rng.randint(0, 9)}", rng.randint(0, 999))
            hub.send(conns[name], Op(op=op))
        for name, conn in conns.items():
            for message in hub.drain(conn):
                if isinstance(message, Op):
                    docs[name].apply_remote(message.op)
                elif isinstance(message, Snapshot):
                    docs[name].merge_snapshot(list(message.entries))
        assert docs["A"].canonical_json() == docs["B"].canonical_json()
        assert docs["A"].canonical_json() == hub.core.doc.canonical_json()


@pytest.fixture()
def free_port():
    import socket

    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


class TestWebsocketEndToEnd:
    def test_two_clients_converge_over_sockets(self, free_port):
        async def scenario():
            server = RelayServer(port=free_port)
            await server.start()
            try:
                doc_a, doc_b = Document("A"), Document("B")
                url = f"ws://127.0.0.1:{free_port}"
                client_a = RelayClient(url, "e2e", "A", doc_a)
                client_b = RelayClient(url, "e2e", "B", doc_b)
                await client_a.connect()
                await client_b.connect()
                rng = random.Random(8)
                for i in range(100):
                    if rng.random() < 0.5:
                        await client_a.send_op(doc_a.local_set(f"k{rng.randint(0, 9)}", i))
                    else:
                        await client_b.send_op(doc_b.local_set(f"k{rng.randint(0, 9)}", -i))
                deadline = asyncio.get_running_loop().time() + 2.0
                while asyncio.get_running_loop().time() < deadline:
                    if doc_a.canonical_json() == doc_b.canonical_json():
                        break
                    await asyncio.sleep(0.02)
                assert doc_a.canonical_json() == doc_b.canonical_json()
                assert not client_a.errors and not client_b.errors
                await client_a.close()
                await client_b.close()
            finally:
                await server.stop()

        asyncio.run(scenario())

    def test_late_joiner_receives_state_over_sockets(self, free_port):
        async def scenario():
            server = RelayServer(port=free_port)
            await server.start()
            try:
                url = f"ws://127.0.0.1:{free_port}"
                doc_a = Document("A")
                client_a = RelayClient(url, "late", "A", doc_a)
                await client_a.connect()
                for i in range(5):
                    await client_a.send_op(doc_a.local_set(f"k{i}", i))
                await asyncio.sleep(0.1)
                doc_b = Document("B")
                client_b = RelayClient(url, "late", "B", doc_b)
                await client_b.connect()  # waits for its snapshot
                assert doc_b.canonical_json() == doc_a.canonical_json()
                await client_a.close()
                await client_b.close()
            finally:
                await server.stop()

        asyncio.run(scenario())

    def test_third_client_rejected(self, free_port):
        async def scenario():
            server = RelayServer(port=free_port)
            await server.start()
            try:
                url = f"ws://127.0.0.1:{free_port}"
                clients = []
                for name in ("A", "B"):
                    client = RelayClient(url, "full", name, Document(name))
                    await client.connect()
                    clients.append(client)
                straggler = RelayClient(url, "full", "C", Document("C"))
                with pytest.raises(asyncio.TimeoutError):
                    await straggler.connect()  # no snapshot ever arrives
                assert any(e.code == "session_full" for e in straggler.errors)
                for client in clients:
                    await client.close()
                await straggler.close()
            finally:
                await server.stop()

        asyncio.run(scenario())

    def test_bad_path_rejected(self, free_port):
        async def scenario():
            import websockets

            server = RelayServer(port=free_port)
            await server.start()
            try:
                ws = await websockets.connect(f"ws://127.0.0.1:{free_port}/nope")
                raw = await asyncio.wait_for(ws.recv(), timeout=2)
                message = decode(raw)
                assert isinstance(message, Error)
                await ws.close()
            finally:
                await server.stop()

        asyncio.run(scenario())
