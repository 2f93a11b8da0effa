from __future__ import annotations

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pairviz.replica import Document, PresenceStore, ReplicaOp


class TestLocalSet:
    def test_first_write_has_clock_one(self):
        doc = Document("A")
        op = doc.local_set("a", 1)
        assert op.clock == 1
        assert op.replica == "A"
        assert doc.get("a") == 1

    def test_successive_clocks(self):
        doc = Document("A")
        assert doc.local_set("a", 1).clock == 1
        assert doc.local_set("b", 2).clock == 2

    def test_lamport_rule_after_remote(self):
        doc = Document("A")
        doc.apply_remote(ReplicaOp(key="x", value=0, clock=7, replica="B"))
        assert doc.local_set("y", 1).clock == 8

    def test_unserializable_value_rejected(self):
        doc = Document("A")
        with pytest.raises(ValueError, match="serializable"):
            doc.local_set("a", object())

    def test_emitted_clocks_strictly_increase(self):
        doc = Document("A")
        clocks = [doc.local_set(f"k{i % 3}", i).clock for i in range(20)]
        assert clocks == sorted(set(clocks))


class TestApplyRemote:
    def test_replica_tiebreak(self):
        doc = Document("X")
        doc.apply_remote(ReplicaOp(key="k", value="a", clock=5, replica="A"))
        assert doc.apply_remote(ReplicaOp(key="k", value="b", clock=5, replica="B"))
        assert doc.get("k") == "b"

    def test_clock_dominates_replica(self):
        doc = Document("X")
        doc.apply_remote(ReplicaOp(key="k", value="b", clock=6, replica="B"))
        assert not doc.apply_remote(ReplicaOp(key="k", value="z", clock=5, replica="Z"))
        assert doc.get("k") == "b"

    def test_idempotent(self):
        doc = Document("X")
        op = ReplicaOp(key="k", value=1, clock=3, replica="A")
        assert doc.apply_remote(op)
        assert not doc.apply_remote(op)
        assert doc.get("k") == 1

    @given(
        st.lists(
            st.tuples(
                st.sampled_from(["k1", "k2", "k3"]),
                st.integers(0, 100),
                st.integers(1, 50),
            ),
            max_size=20,
        )
    )
    def test_commutative_pairwise(self, raw_ops):
        # Distinct replica per op keeps (clock, replica) unique per key, as
        # the op invariant requires; equal clocks still exercise the tiebreak.
        ops = [
            ReplicaOp(key=k, value=v, clock=c, replica=f"R{i:02d}")
            for i, (k, v, c) in enumerate(raw_ops)
        ]
        for i in range(len(ops)):
            for j in range(i + 1, len(ops)):
                d1, d2 = Document("X"), Document("Y")
                d1.apply_remote(ops[i])
                d1.apply_remote(ops[j])
                d2.apply_remote(ops[j])
                d2.apply_remote(ops[i])
                assert d1.canonical_json() == d2.canonical_json()


class TestSnapshot:
    def test_merge_own_snapshot_changes_nothing(self):
        doc = Document("A")
        doc.local_set("a", 1)
        doc.local_set("b", [1, 2])
        assert doc.merge_snapshot(doc.snapshot()) == 0

    def test_merge_into_empty(self):
        src = Document("A")
        for i in range(5):
            src.local_set(f"k{i}", i)
        dst = Document("B")
        assert dst.merge_snapshot(src.snapshot()) == 5
        assert dst.canonical_json() == src.canonical_json()

    def test_malformed_entry_names_key(self):
        doc = Document("A")
        with pytest.raises(ValueError, match="badkey"):
            doc.merge_snapshot([{"key": "badkey", "clock": "x", "replica": "A", "value": 1}])

    def test_cross_merge_convergence(self):
        rng = random.Random(99)
        for _ in range(50):
            a, b = Document("A"), Document("B")
            for _ in range(rng.randint(0, 40)):
                doc = a if rng.random() < 0.5 else b
                doc.local_set(f"k{rng.randint(0, 9)}", rng.randint(0, 999))
            a_snap, b_snap = a.snapshot(), b.snapshot()
            a.merge_snapshot(b_snap)
            b.merge_snapshot(a_snap)
            assert a.canonical_json() == b.canonical_json()


class TestConvergenceUnderReordering:
    def test_shuffled_delivery_converges(self):
        rng = random.Random(4242)
        pair_space = [(c, r) for c in range(1, 80) for r in "ABC"]
        for _ in range(200):
            n_ops = rng.randint(1, 200)
            # (clock, replica) sampled without replacement: unique per key
            # history, with plenty of equal-clock tiebreak collisions.
            pairs = rng.sample(pair_space, n_ops)
            ops = [
                ReplicaOp(
                    key=f"k{rng.randint(0, 19)}",
                    value=rng.randint(0, 10**6),
                    clock=c,
                    replica=r,
                )
                for c, r in pairs
            ]
            order1 = list(ops)
            order2 = list(ops)
            rng.shuffle(order1)
            rng.shuffle(order2)
            d1, d2 = Document("X"), Document("Y")
            for op in order1:
                d1.apply_remote(op)
            for op in order2:
                d2.apply_remote(op)
            assert d1.canonical_json() == d2.canonical_json()


class TestPresence:
    def test_expiry_boundary(self):
        store = PresenceStore()
        store.update("A", 1, {"x": 1}, now_ms=1000)
        assert "A" in store.read(1500)       # exactly 500 ms old: still fresh
        assert "A" not in store.read(1501)   # older than 500 ms: gone

    def test_seq_strictly_increasing(self):
        store = PresenceStore()
        assert store.update("A", 2, {"v": "new"}, now_ms=0)
        assert not store.update("A", 2, {"v": "dup"}, now_ms=1)
        assert not store.update("A", 1, {"v": "old"}, now_ms=2)
        assert store.read(10)["A"] == {"v": "new"}

    def test_update_refreshes_ttl(self):
        store = PresenceStore()
        store.update("A", 1, {}, now_ms=0)
        store.update("A", 2, {}, now_ms=400)
        assert "A" in store.read(850)
