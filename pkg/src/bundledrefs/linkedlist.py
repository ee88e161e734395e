"""Sorted linked list with lazy synchronization and bundled links.

Set semantics over a singly linked list with head/tail sentinels. Updates
lock at most two adjacent nodes and version the affected links through
bundles; membership probes and range queries never lock, they resolve links
at a snapshot timestamp (range queries) or at the infinitely large
timestamp (contains), waiting only on pending bundle entries.

Range queries run in three phases: an uninstrumented *pre-range* walk over
plain ``next`` links to the last node below the range, an *enter-range*
switch onto bundles at the snapshot timestamp, and a *collect-range* walk
that gathers the result with exactly ``len(result) + 1`` dereferences.
"""

from __future__ import annotations

import threading
from typing import Any, Iterator, NamedTuple, Optional

from .core import (
    Bundle,
    CONTAINS_TS,
    DEFAULT_SPIN_BUDGET,
    GlobalClock,
    KEY_MAX,
    KEY_MIN,
    PENDING_TS,
    dereference_bundle,
    finalize_bundles,
    prepare_bundles,
)
from .reclamation import EpochManager


class RangeResult(NamedTuple):
    """Range query result extended with harness-facing instrumentation."""

    pairs: list[tuple[int, Any]]
    ts: int
    collect_derefs: int

    @property
    def keys(self) -> tuple[int, ...]:
        return tuple(k for k, _ in self.pairs)


class ListNode:
    __slots__ = ("key", "value", "lock", "deleted", "next", "bundle")

    def __init__(self, key: int, value: Any,
                 next_node: Optional["ListNode"]) -> None:
        self.key = key
        self.value = value
        self.lock = threading.Lock()
        self.deleted = False
        self.next = next_node
        self.bundle = Bundle()

    def bundle_refs(self) -> tuple[Bundle, ...]:
        return (self.bundle,)

    def poison(self) -> None:
        self.key = None
        self.value = None
        self.next = None
        self.bundle = None

    def __repr__(self) -> str:  # pragma: no cover
        return f"ListNode({self.key})"


def collect_from(pred, low: int, high: int, ts: int,
                 spin_budget: int) -> tuple[list[tuple[int, Any]], int]:
    """Enter-range and collect-range over a chain of bundled links.

    ``pred`` is any node below the range that was reachable when the
    snapshot was fixed (a stale predecessor is fine: a removed node's
    redirect entry routes the walk back to the head sentinel). The
    collect phase dereferences exactly ``len(result) + 1`` bundles.
    """
    node = pred
    while True:
        nxt = dereference_bundle(node.bundle, ts, spin_budget)
        if nxt.key >= low:
            break
        node = nxt
    pairs: list[tuple[int, Any]] = []
    derefs = 0
    while True:
        node = dereference_bundle(node.bundle, ts, spin_budget)
        derefs += 1
        if node.key > high:
            break
        pairs.append((node.key, node.value))
    return pairs, derefs


class BundledLinkedList:
    """Concurrent sorted set with linearizable range queries."""

    name = "list"

    def __init__(self, *, clock: Optional[GlobalClock] = None,
                 epochs: Optional[EpochManager] = None,
                 rq_reads_advance_clock: bool = False,
                 spin_budget: int = DEFAULT_SPIN_BUDGET) -> None:
        self.clock = clock or GlobalClock()
        self.epochs = epochs or EpochManager(self.clock, spin_budget)
        self._spin = spin_budget
        self._rq_advance = rq_reads_advance_clock
        tail = ListNode(KEY_MAX, None, None)
        tail.bundle.init_entry(tail)
        head = ListNode(KEY_MIN, None, tail)
        head.bundle.init_entry(tail)
        self.head = head
        self.tail = tail
        self.epochs.note_node_alloc(2)
        self.epochs.note_entry_alloc(2)

    # -- key checks ---------------------------------------------------------

    @staticmethod
    def _check_key(key: int) -> None:
        if not (KEY_MIN < key < KEY_MAX):
            raise ValueError(f"key {key!r} outside the usable key space")

    # -- traversal ------------------------------------------------------------

    def _traverse(self, key: int) -> tuple[ListNode, ListNode]:
        """Plain-link walk; returns (pred, curr) with pred.key < key <= curr.key."""
        pred = self.head
        curr = pred.next
        while curr.key < key:
            pred = curr
            curr = curr.next
        return pred, curr

    @staticmethod
    def _validate(pred: ListNode, curr: ListNode) -> bool:
        return not pred.deleted and not curr.deleted and pred.next is curr

    def get_next(self, node: ListNode) -> ListNode:
        """Uninstrumented successor (pre-range phase step)."""
        return node.next

    def get_next_from_bundle(self, node: ListNode, ts: int) -> ListNode:
        return dereference_bundle(node.bundle, ts, self._spin)

    # -- updates ---------------------------------------------------------------

    def insert(self, key: int, value: Any) -> bool:
        return self.insert_with_ts(key, value)[0]

    def insert_with_ts(self, key: int, value: Any) -> tuple[bool, Optional[int]]:
        """Insert; returns (success, linearization timestamp).

        Only the predecessor is locked. The new node's bundle is prepared
        before the predecessor's so that a reader entering through the
        predecessor can always finish through the new node.
        """
        self._check_key(key)
        self.epochs.enter()
        try:
            while True:
                pred, curr = self._traverse(key)
                with pred.lock:
                    if not self._validate(pred, curr):
                        continue
                    if curr.key == key:
                        return False, None
                    node = ListNode(key, value, curr)
                    self.epochs.note_node_alloc()
                    bundles = [node.bundle, pred.bundle]
                    ts = prepare_bundles(
                        [(node.bundle, curr), (pred.bundle, node)],
                        self.clock, self._spin)
                    self.epochs.note_entry_alloc(2)
                    pred.next = node
                    finalize_bundles(bundles, ts)
                    return True, ts
        finally:
            self.epochs.exit()

    def remove(self, key: int) -> bool:
        return self.remove_with_ts(key)[0]

    def remove_with_ts(self, key: int) -> tuple[bool, Optional[int]]:
        """Remove; the victim's bundle gains a redirect to the head sentinel
        so that a stale traversal parked on it rejoins a consistent path."""
        self._check_key(key)
        self.epochs.enter()
        try:
            while True:
                pred, curr = self._traverse(key)
                if curr.key != key:
                    return False, None
                with pred.lock, curr.lock:
                    if not self._validate(pred, curr):
                        continue
                    succ = curr.next
                    bundles = [pred.bundle, curr.bundle]
                    ts = prepare_bundles(
                        [(pred.bundle, succ), (curr.bundle, self.head)],
                        self.clock, self._spin)
                    self.epochs.note_entry_alloc(2)
                    curr.deleted = True
                    pred.next = succ
                    finalize_bundles(bundles, ts)
                    self.epochs.retire_node(curr)
                    return True, ts
        finally:
            self.epochs.exit()

    # -- reads -----------------------------------------------------------------

    def contains(self, key: int) -> bool:
        """Single-key range probe at the infinitely large timestamp; never
        reads the clock and never touches the range-query table."""
        self._check_key(key)
        self.epochs.enter()
        try:
            pred, _ = self._traverse(key)
            node = dereference_bundle(pred.bundle, CONTAINS_TS, self._spin)
            while node.key < key:
                node = dereference_bundle(node.bundle, CONTAINS_TS, self._spin)
            return node.key == key
        finally:
            self.epochs.exit()

    def range_query(self, low: int, high: int) -> list[tuple[int, Any]]:
        return self.range_query_ext(low, high).pairs

    def range_query_ext(self, low: int, high: int) -> RangeResult:
        """Linearizable range query; result equals the abstract set at the
        returned snapshot timestamp restricted to [low, high]."""
        self._check_range(low, high)
        self.epochs.enter()
        try:
            pred, _ = self._traverse(low)
            self.epochs.rq_set_pending()
            ts = self.clock.advance() if self._rq_advance else self.clock.read()
            self.epochs.rq_announce(ts)
            try:
                pairs, derefs = collect_from(pred, low, high, ts, self._spin)
            finally:
                self.epochs.rq_clear()
            return RangeResult(pairs, ts, derefs)
        finally:
            self.epochs.exit()

    def range_query_unsafe(self, low: int, high: int) -> tuple[list, int]:
        """Uninstrumented walk over plain links: NOT linearizable. Kept as a
        harness flag so the replay oracle has a negative control."""
        self._check_range(low, high)
        self.epochs.enter()
        try:
            ts = self.clock.read()
            pred, _ = self._traverse(low)
            pairs = []
            node = pred.next
            while node.key <= high:
                if node.key >= low:
                    pairs.append((node.key, node.value))
                node = node.next
            return pairs, ts
        finally:
            self.epochs.exit()

    def snapshot_range(self, low: int, high: int, ts: int) -> list[tuple[int, Any]]:
        """Replay the range at an explicit timestamp (tests and self-checks;
        caller must know ts is at or above the retirement horizon)."""
        self._check_range(low, high)
        self.epochs.enter()
        try:
            pred, _ = self._traverse(low)
            pairs, _ = collect_from(pred, low, high, ts, self._spin)
            return pairs
        finally:
            self.epochs.exit()

    def _check_range(self, low: int, high: int) -> None:
        self._check_key(low)
        self._check_key(high)
        if low > high:
            raise ValueError(f"empty range [{low}, {high}]")

    # -- reclamation / audit hooks ----------------------------------------------

    def iter_bundles(self) -> Iterator[Bundle]:
        node = self.head
        while node is not None:
            yield node.bundle
            node = node.next

    def live_counts(self) -> dict[str, int]:
        nodes = entries = 0
        node = self.head
        while node is not None:
            nodes += 1
            entries += sum(1 for _ in node.bundle.entries())
            node = node.next
        return {"nodes": nodes, "entries": entries}

    # -- quiescent self-checks -----------------------------------------------

    def check_invariants(self) -> None:
        """Assert structural invariants; only valid with no operations in
        flight (no locks held, no pending entries)."""
        node = self.head
        while node is not self.tail:
            nxt = node.next
            assert node.key < nxt.key, "keys not strictly increasing"
            target, ts = node.bundle.newest()
            assert ts != PENDING_TS, "pending bundle head at quiescence"
            assert target is nxt, "link and bundle head disagree"
            last = None
            for entry in node.bundle.entries():
                if last is not None:
                    assert entry.ts < last, "bundle not strictly decreasing"
                last = entry.ts
            node = nxt
