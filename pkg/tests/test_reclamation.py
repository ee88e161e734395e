"""Epochs, limbo lists, the RQ announcement table, and bundle trimming."""

import threading
import time

import pytest

from bundledrefs.core import Bundle, BundleEntry, GlobalClock
from bundledrefs.linkedlist import BundledLinkedList
from bundledrefs.reclamation import (
    EpochManager,
    UseAfterFreeError,
    cleanup_pass,
    trim_bundle,
)


class FakeNode:
    def __init__(self):
        self.bundle = Bundle()
        self.bundle.init_entry(self)
        self.poisoned = False

    def bundle_refs(self):
        return (self.bundle,)

    def poison(self):
        self.poisoned = True


def make_bundle(stamps):
    head = None
    for ts in sorted(stamps):
        head = BundleEntry(f"node@{ts}", ts=ts, next_entry=head)
    bundle = Bundle()
    bundle.head = head
    return bundle


class TestEpochs:
    def test_retire_frees_after_two_advances(self):
        mgr = EpochManager(GlobalClock())
        node = FakeNode()
        mgr.enter()
        mgr.retire_node(node)
        mgr.exit()
        assert not node.poisoned
        assert mgr.try_advance_epoch()
        mgr.enter(); mgr.exit()
        assert not node.poisoned, "freed after a single epoch advance"
        assert mgr.try_advance_epoch()
        mgr.enter(); mgr.exit()
        assert node.poisoned

    def test_parked_thread_blocks_advance(self):
        mgr = EpochManager(GlobalClock())
        inside = threading.Event()
        release = threading.Event()

        def parked():
            mgr.enter()
            inside.set()
            release.wait(5.0)
            mgr.exit()

        t = threading.Thread(target=parked)
        t.start()
        inside.wait(2.0)
        assert mgr.try_advance_epoch()  # parked thread announced the current epoch
        assert not mgr.try_advance_epoch(), "advanced past an active thread"
        release.set()
        t.join()
        assert mgr.try_advance_epoch()

    def test_unbalanced_exit_asserts(self):
        mgr = EpochManager(GlobalClock())
        with pytest.raises(AssertionError):
            mgr.exit()
        mgr.enter()
        with pytest.raises(AssertionError):
            mgr.enter()

    def test_use_after_free_is_loud(self):
        mgr = EpochManager(GlobalClock())
        bundle = make_bundle([1, 3, 5])
        stale = bundle.head.next_entry.next_entry  # the (1) entry
        mgr.enter()
        trim_bundle(bundle, 3, mgr)
        mgr.exit()
        mgr.drain()
        with pytest.raises(UseAfterFreeError):
            _ = stale.target.key


class TestRqTable:
    def test_oldest_is_minimum_of_announced(self):
        mgr = EpochManager(GlobalClock())
        slots = []

        def announce(ts):
            mgr.rq_announce(ts)
            slots.append(ts)

        t1 = threading.Thread(target=lambda: announce(3))
        t2 = threading.Thread(target=lambda: announce(7))
        t1.start(); t2.start(); t1.join(); t2.join()
        mgr.enter()
        assert mgr.oldest_active_ts() == 3
        mgr.exit()

    def test_no_active_returns_clock(self):
        clock = GlobalClock()
        for _ in range(12):
            clock.advance()
        mgr = EpochManager(clock)
        mgr.enter()
        assert mgr.oldest_active_ts() == 12
        mgr.exit()

    def test_pending_slot_blocks_cleanup_scan(self):
        clock = GlobalClock()
        for _ in range(6):
            clock.advance()
        mgr = EpochManager(clock)

        pending_set = threading.Event()
        announce_now = threading.Event()

        def reader():
            mgr.rq_set_pending()
            pending_set.set()
            announce_now.wait(5.0)
            mgr.rq_announce(7)

        t = threading.Thread(target=reader)
        t.start()
        pending_set.wait(2.0)

        got = {}
        done = threading.Event()

        def scan():
            mgr.enter()
            got["ts"] = mgr.oldest_active_ts()
            mgr.exit()
            done.set()

        s = threading.Thread(target=scan)
        s.start()
        assert not done.wait(0.15), "scan ignored a pending slot"
        announce_now.set()
        assert done.wait(2.0)
        t.join(); s.join()
        assert got["ts"] == 7

    def test_threshold_never_regresses(self):
        clock = GlobalClock()
        mgr = EpochManager(clock)
        mgr.enter()
        seen = []
        for _ in range(20):
            clock.advance()
            seen.append(mgr.oldest_active_ts())
        mgr.exit()
        assert seen == sorted(seen)


class TestTrim:
    def test_keeps_satisfying_entry(self):
        mgr = EpochManager(GlobalClock())
        bundle = make_bundle([1, 3, 5])
        mgr.enter()
        retired = trim_bundle(bundle, 3, mgr)
        mgr.exit()
        assert retired == 1
        assert [e.ts for e in bundle.entries()] == [5, 3]

    def test_single_entry_untouched(self):
        mgr = EpochManager(GlobalClock())
        bundle = make_bundle([4])
        mgr.enter()
        assert trim_bundle(bundle, 9, mgr) == 0
        mgr.exit()
        assert [e.ts for e in bundle.entries()] == [4]

    def test_all_entries_above_threshold_untouched(self):
        mgr = EpochManager(GlobalClock())
        bundle = make_bundle([5, 3])
        mgr.enter()
        assert trim_bundle(bundle, 1, mgr) == 0
        mgr.exit()
        assert [e.ts for e in bundle.entries()] == [5, 3]

    def test_golden_history_cleanup(self):
        # after the golden four-op history with no active queries and the
        # clock at 4, each bundle keeps only its newest satisfying entry
        lst = BundledLinkedList()
        assert lst.insert(20, 20)
        assert lst.insert(30, 30)
        node20 = lst.head.next
        assert lst.insert(10, 10)
        assert lst.remove(20)
        retired = cleanup_pass(lst)
        assert retired > 0
        tables = {}
        node = lst.head
        while node is not None:
            label = node.key
            tables[label] = [(e.ts, getattr(e.target, "key", None))
                             for e in node.bundle.entries()]
            node = node.next
        head_key, tail_key = lst.head.key, lst.tail.key
        assert tables[head_key] == [(3, 10)]
        assert tables[10] == [(4, 30)]
        assert tables[30] == [(2, tail_key)]
        # the removed node is unreachable, so per-entry cleanup skips it; its
        # whole chain (redirect included) is reclaimed with the node itself
        assert [(e.ts, e.target.key) for e in node20.bundle.entries()] \
            == [(4, head_key), (2, 30), (1, tail_key)]

    def test_active_rq_retains_needed_entries(self):
        lst = BundledLinkedList()
        for history_key in (20, 30):
            lst.insert(history_key, history_key)
        lst.insert(10, 10)
        lst.remove(20)

        hold = threading.Event()
        announced = threading.Event()

        def old_reader():
            lst.epochs.enter()
            lst.epochs.rq_set_pending()
            lst.epochs.rq_announce(3)
            announced.set()
            hold.wait(5.0)
            lst.epochs.rq_clear()
            lst.epochs.exit()

        t = threading.Thread(target=old_reader)
        t.start()
        announced.wait(2.0)
        cleanup_pass(lst)
        # ts=3 must still resolve: entries newer than the oldest active
        # query's satisfying entry survive
        assert [k for k, _ in lst.snapshot_range(1, 100, 3)] == [10, 20, 30]
        hold.set()
        t.join()


class TestContainsLeavesTableAlone:
    def test_list_and_skiplist_contains_never_announce(self, monkeypatch):
        # the infinitely-large-timestamp probe needs no announcement because
        # cleanup never retires a bundle's newest entry
        from bundledrefs.skiplist import BundledSkipList

        for structure in (BundledLinkedList(), BundledSkipList(seed=1)):
            for key in (3, 7, 11):
                structure.insert(key, key)

            def boom(*_args, **_kwargs):
                raise AssertionError("contains touched the RQ table")

            monkeypatch.setattr(structure.epochs, "rq_set_pending", boom)
            monkeypatch.setattr(structure.epochs, "rq_announce", boom)
            assert structure.contains(7)
            assert not structure.contains(8)


class TestWaitForReaders:
    def test_barrier_waits_for_inflight_traversal(self):
        mgr = EpochManager(GlobalClock())
        inside = threading.Event()
        leave = threading.Event()

        def traverser():
            mgr.begin_traversal()
            inside.set()
            leave.wait(5.0)
            mgr.end_traversal()

        t = threading.Thread(target=traverser)
        t.start()
        inside.wait(2.0)

        done = threading.Event()
        w = threading.Thread(target=lambda: (mgr.wait_for_readers(), done.set()))
        w.start()
        assert not done.wait(0.15), "barrier ignored an in-flight traversal"
        leave.set()
        assert done.wait(2.0)
        t.join(); w.join()

    def test_barrier_ignores_later_traversals(self):
        mgr = EpochManager(GlobalClock())
        mgr.wait_for_readers()  # no readers: immediate


class TestAudit:
    def test_allocation_audit_balances(self):
        import random

        lst = BundledLinkedList()
        rng = random.Random(5)
        for _ in range(2_000):
            key = rng.randrange(1, 120)
            if rng.random() < 0.5:
                lst.insert(key, key)
            else:
                lst.remove(key)
        for _ in range(3):
            cleanup_pass(lst)
        lst.epochs.drain()
        counts = lst.epochs.audit_counts()
        live = lst.live_counts()
        assert counts["limbo"] == 0
        assert counts["nodes_allocated"] == counts["nodes_freed"] + live["nodes"]
        assert counts["entries_allocated"] == counts["entries_freed"] + live["entries"]

    def test_leak_bound_after_quiescence(self):
        import random

        lst = BundledLinkedList()
        rng = random.Random(9)
        for _ in range(1_500):
            key = rng.randrange(1, 80)
            if rng.random() < 0.5:
                lst.insert(key, key)
            else:
                lst.remove(key)
        cleanup_pass(lst)
        # no active queries: every reachable bundle keeps exactly one entry
        node = lst.head
        while node is not None:
            assert sum(1 for _ in node.bundle.entries()) == 1
            node = node.next
