"""Bundled linked list: golden history, snapshots, and sequential model."""

import random
import threading

import pytest
from hypothesis import given, settings, strategies as st

from bundledrefs.core import KEY_MAX, KEY_MIN
from bundledrefs.linkedlist import BundledLinkedList


def bundle_table(node):
    """Bundle contents as [(ts, target_key)], sentinels named."""
    out = []
    for entry in node.bundle.entries():
        key = entry.target.key
        label = "head" if key == KEY_MIN else "tail" if key == KEY_MAX else key
        out.append((entry.ts, label))
    return out


def node_with_key(lst, key):
    node = lst.head
    while node is not None:
        if node.key == key:
            return node
        node = node.next
    raise KeyError(key)


def golden_history(lst):
    """insert(20), insert(30), insert(10), remove(20); returns removed node."""
    assert lst.insert(20, 20)
    assert lst.insert(30, 30)
    removed_probe = node_with_key(lst, 20)
    assert lst.insert(10, 10)
    assert lst.remove(20)
    return removed_probe


#: snapshot of the whole key space after the golden history, per timestamp
GOLDEN_SNAPSHOTS = {0: [], 1: [20], 2: [20, 30], 3: [10, 20, 30], 4: [10, 30]}


class TestGoldenHistory:
    def test_bundle_tables(self):
        lst = BundledLinkedList()
        node20 = golden_history(lst)
        assert bundle_table(lst.head) == [(3, 10), (1, 20), (0, "tail")]
        assert bundle_table(node_with_key(lst, 10)) == [(4, 30), (3, 20)]
        assert bundle_table(node20) == [(4, "head"), (2, 30), (1, "tail")]
        assert bundle_table(node_with_key(lst, 30)) == [(2, "tail")]

    def test_replayed_range_queries(self):
        lst = BundledLinkedList()
        golden_history(lst)
        for ts, expected in GOLDEN_SNAPSHOTS.items():
            got = [k for k, _ in lst.snapshot_range(1, 100, ts)]
            assert got == expected, f"snapshot at ts={ts}"

    def test_clock_after_history(self):
        lst = BundledLinkedList()
        golden_history(lst)
        assert lst.clock.read() == 4

    def test_head_newest_after_history(self):
        lst = BundledLinkedList()
        golden_history(lst)
        target, ts = lst.head.bundle.newest()
        assert (target.key, ts) == (10, 3)

    def test_contains_after_history(self):
        lst = BundledLinkedList()
        golden_history(lst)
        assert not lst.contains(20)
        assert lst.contains(10)
        assert lst.contains(30)

    def test_get_next_helpers(self):
        lst = BundledLinkedList()
        golden_history(lst)
        assert lst.get_next(lst.head).key == 10
        assert lst.get_next_from_bundle(node_with_key(lst, 10), 3).key == 20
        assert lst.get_next_from_bundle(node_with_key(lst, 10), 4).key == 30

    def test_invariants_hold(self):
        lst = BundledLinkedList()
        golden_history(lst)
        lst.check_invariants()


class TestBasicOps:
    def test_insert_into_empty(self):
        lst = BundledLinkedList()
        assert lst.insert(20, "v")
        assert bundle_table(lst.head) == [(1, 20), (0, "tail")]
        assert bundle_table(node_with_key(lst, 20)) == [(1, "tail")]

    def test_duplicate_insert_returns_false(self):
        lst = BundledLinkedList()
        assert lst.insert(20, "a")
        assert not lst.insert(20, "b")
        assert lst.clock.read() == 1  # failed insert never advances the clock

    def test_remove_absent_returns_false(self):
        lst = BundledLinkedList()
        lst.insert(10, 10)
        lst.insert(30, 30)
        assert not lst.remove(99)

    def test_contains_on_empty(self):
        lst = BundledLinkedList()
        assert not lst.contains(7)

    def test_range_query_disjoint(self):
        lst = BundledLinkedList()
        lst.insert(10, 10)
        lst.insert(30, 30)
        assert lst.range_query(50, 60) == []

    def test_range_query_returns_pairs_in_order(self):
        lst = BundledLinkedList()
        for k in (5, 1, 9, 3):
            lst.insert(k, k * 10)
        assert lst.range_query(1, 9) == [(1, 10), (3, 30), (5, 50), (9, 90)]

    def test_sentinel_keys_rejected(self):
        lst = BundledLinkedList()
        with pytest.raises(ValueError):
            lst.insert(KEY_MIN, None)
        with pytest.raises(ValueError):
            lst.contains(KEY_MAX)
        with pytest.raises(ValueError):
            lst.range_query(5, 4)

    def test_insert_does_not_overwrite_value(self):
        lst = BundledLinkedList()
        lst.insert(3, "first")
        lst.insert(3, "second")
        assert lst.range_query(3, 3) == [(3, "first")]


class TestRedirect:
    def test_removed_node_redirects_to_head(self):
        lst = BundledLinkedList()
        node20 = golden_history(lst)
        target, ts = node20.bundle.newest()
        assert target is lst.head
        assert ts == 4

    def test_traversal_from_removed_node_recovers(self):
        # a stale predecessor parked on a removed node must still produce
        # the exact snapshot, via the head redirect
        lst = BundledLinkedList()
        node20 = golden_history(lst)
        from bundledrefs.linkedlist import collect_from

        pairs, _ = collect_from(node20, 1, 100, 4, lst._spin)
        assert [k for k, _ in pairs] == [10, 30]

    def test_chain_of_removals_redirects(self):
        lst = BundledLinkedList()
        for k in range(1, 8):
            lst.insert(k, k)
        probe = node_with_key(lst, 4)
        for k in (4, 5, 6):
            lst.remove(k)
        ts = lst.clock.read()
        from bundledrefs.linkedlist import collect_from

        pairs, _ = collect_from(probe, 1, 100, ts, lst._spin)
        assert [k for k, _ in pairs] == [1, 2, 3, 7]


class TestCollectMinimality:
    def test_deref_count_is_result_plus_one(self):
        lst = BundledLinkedList()
        for k in range(0, 100, 2):
            lst.insert(k, k)
        for low, high in [(10, 20), (9, 21), (1, 1), (0, 98), (95, 99), (3, 5)]:
            res = lst.range_query_ext(low, high)
            assert res.collect_derefs == len(res.pairs) + 1, (low, high)

    def test_empty_range_costs_one_deref(self):
        lst = BundledLinkedList()
        lst.insert(10, 10)
        lst.insert(30, 30)
        res = lst.range_query_ext(50, 60)
        assert res.pairs == []
        assert res.collect_derefs == 1


class TestSequentialEquivalence:
    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.tuples(st.sampled_from(["ins", "rem", "has", "rq"]),
                              st.integers(min_value=1, max_value=24)),
                    max_size=120))
    def test_against_reference_set(self, ops):
        lst = BundledLinkedList()
        model = set()
        for op, key in ops:
            if op == "ins":
                assert lst.insert(key, key) == (key not in model)
                model.add(key)
            elif op == "rem":
                assert lst.remove(key) == (key in model)
                model.discard(key)
            elif op == "has":
                assert lst.contains(key) == (key in model)
            else:
                lo = max(1, key - 5)
                got = [k for k, _ in lst.range_query(lo, key)]
                assert got == sorted(k for k in model if lo <= k <= key)
        got = [k for k, _ in lst.range_query(1, 24)]
        assert got == sorted(model)
        lst.check_invariants()

    def test_randomized_long_run(self):
        rng = random.Random(7)
        lst = BundledLinkedList()
        model = set()
        for _ in range(4_000):
            key = rng.randrange(1, 200)
            op = rng.random()
            if op < 0.45:
                assert lst.insert(key, key) == (key not in model)
                model.add(key)
            elif op < 0.9:
                assert lst.remove(key) == (key in model)
                model.discard(key)
            else:
                assert lst.contains(key) == (key in model)
        assert [k for k, _ in lst.range_query(1, 199)] == sorted(model)


class TestConcurrentSmoke:
    def test_insert_waits_on_new_node_pending(self, monkeypatch):
        # an insert whose predecessor is a freshly linked, not yet finalized
        # node must block in prepare until the first insert finalizes
        from bundledrefs import linkedlist as ll_mod

        lst = BundledLinkedList()
        lst.insert(10, 10)

        stalled = threading.Event()
        release = threading.Event()
        orig = ll_mod.finalize_bundles

        def stalling_finalize(bundles, ts):
            if threading.current_thread().name == "ins20":
                stalled.set()
                release.wait(5.0)
            orig(bundles, ts)

        monkeypatch.setattr(ll_mod, "finalize_bundles", stalling_finalize)
        t1 = threading.Thread(target=lambda: lst.insert(20, 20), name="ins20")
        t1.start()
        assert stalled.wait(2.0)

        # node 20 is linked but its bundle head is pending; insert(25)
        # picks it as the predecessor and must wait inside prepare
        done = threading.Event()
        got = {}

        def second():
            got["ok"] = lst.insert(25, 25)
            done.set()

        t2 = threading.Thread(target=second, name="ins25")
        t2.start()
        assert not done.wait(0.15), "second insert overtook a pending entry"
        release.set()
        t1.join()
        assert done.wait(5.0)
        t2.join()
        assert got["ok"]
        assert [k for k, _ in lst.range_query(1, 100)] == [10, 20, 25]
        lst.check_invariants()

    def test_parallel_mixed_ops_preserve_set_semantics(self):
        lst = BundledLinkedList()
        keyspace = 60
        n_threads = 4

        def work(seed):
            rng = random.Random(seed)
            for _ in range(600):
                key = rng.randrange(1, keyspace)
                r = rng.random()
                if r < 0.4:
                    lst.insert(key, key)
                elif r < 0.8:
                    lst.remove(key)
                elif r < 0.9:
                    lst.contains(key)
                else:
                    res = lst.range_query_ext(1, keyspace - 1)
                    keys = [k for k, _ in res.pairs]
                    assert keys == sorted(set(keys)), "range result not sorted-unique"

        threads = [threading.Thread(target=work, args=(s,)) for s in range(n_threads)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        lst.check_invariants()
