"""Lazy skip list with bundled links at the data layer only.

Index layers are plain references under the original lazy-skip-list locking
discipline and exist purely to accelerate the uninstrumented pre-range
descent; every linearizable read resolves the bottom layer through bundles,
so capping the height changes speed but never results.
"""

from __future__ import annotations

import random
import threading
from typing import Any, Iterator, Optional

from .core import (
    Bundle,
    CONTAINS_TS,
    DEFAULT_SPIN_BUDGET,
    GlobalClock,
    KEY_MAX,
    KEY_MIN,
    PENDING_TS,
    _pause,
    dereference_bundle,
    finalize_bundles,
    prepare_bundles,
)
from .linkedlist import RangeResult, collect_from
from .reclamation import EpochManager

MAX_LEVEL = 20


class SkipNode:
    __slots__ = ("key", "value", "lock", "deleted", "fully_linked",
                 "top_level", "next", "bundle")

    def __init__(self, key: int, value: Any, top_level: int) -> None:
        self.key = key
        self.value = value
        self.lock = threading.Lock()
        self.deleted = False
        self.fully_linked = False
        self.top_level = top_level
        self.next: list[Optional[SkipNode]] = [None] * (top_level + 1)
        self.bundle = Bundle()

    def bundle_refs(self) -> tuple[Bundle, ...]:
        return (self.bundle,)

    def poison(self) -> None:
        self.key = None
        self.value = None
        self.next = None
        self.bundle = None

    def __repr__(self) -> str:  # pragma: no cover
        return f"SkipNode({self.key}, levels={self.top_level + 1})"


class BundledSkipList:
    """Concurrent sorted set; probabilistic index, bundled data layer."""

    name = "skiplist"

    def __init__(self, *, clock: Optional[GlobalClock] = None,
                 epochs: Optional[EpochManager] = None,
                 rq_reads_advance_clock: bool = False,
                 spin_budget: int = DEFAULT_SPIN_BUDGET,
                 seed: int = 0, p: float = 0.5,
                 level_cap: Optional[int] = None) -> None:
        self.clock = clock or GlobalClock()
        self.epochs = epochs or EpochManager(self.clock, spin_budget)
        self._spin = spin_budget
        self._rq_advance = rq_reads_advance_clock
        self._seed = seed
        self._p = p
        # level_cap=1 forces every node to height 1 (index-independence mode)
        self._max_level = min(MAX_LEVEL, level_cap) if level_cap else MAX_LEVEL
        self._rng_local = threading.local()
        self._tid_counter = 0
        self._tid_lock = threading.Lock()
        tail = SkipNode(KEY_MAX, None, MAX_LEVEL - 1)
        tail.bundle.init_entry(tail)
        tail.fully_linked = True
        head = SkipNode(KEY_MIN, None, MAX_LEVEL - 1)
        head.next = [tail] * MAX_LEVEL
        head.bundle.init_entry(tail)
        head.fully_linked = True
        self.head = head
        self.tail = tail
        self.epochs.note_node_alloc(2)
        self.epochs.note_entry_alloc(2)

    # -- level generation -----------------------------------------------------

    def _rng(self) -> random.Random:
        rng = getattr(self._rng_local, "rng", None)
        if rng is None:
            with self._tid_lock:
                tid = self._tid_counter
                self._tid_counter += 1
            rng = random.Random((self._seed << 20) ^ (tid + 1))
            self._rng_local.rng = rng
        return rng

    def random_level(self) -> int:
        """Geometric level draw (p = 0.5 by default), capped at max level."""
        rng = self._rng()
        level = 0
        while level < self._max_level - 1 and rng.random() < self._p:
            level += 1
        return level

    # -- traversal --------------------------------------------------------------

    @staticmethod
    def _check_key(key: int) -> None:
        if not (KEY_MIN < key < KEY_MAX):
            raise ValueError(f"key {key!r} outside the usable key space")

    def _find(self, key: int):
        """Per-level (pred, succ) pairs plus the highest level holding key."""
        preds: list[SkipNode] = [None] * MAX_LEVEL  # type: ignore[list-item]
        succs: list[SkipNode] = [None] * MAX_LEVEL  # type: ignore[list-item]
        level_found = -1
        pred = self.head
        for level in range(MAX_LEVEL - 1, -1, -1):
            curr = pred.next[level]
            while curr.key < key:
                pred = curr
                curr = curr.next[level]
            if level_found == -1 and curr.key == key:
                level_found = level
            preds[level] = pred
            succs[level] = curr
        return preds, succs, level_found

    def _data_pred(self, key: int) -> SkipNode:
        """Index-layer descent to the data-layer node just below key."""
        pred = self.head
        for level in range(MAX_LEVEL - 1, -1, -1):
            curr = pred.next[level]
            while curr.key < key:
                pred = curr
                curr = curr.next[level]
        return pred

    # -- updates -----------------------------------------------------------------

    def insert(self, key: int, value: Any) -> bool:
        return self.insert_with_ts(key, value)[0]

    def insert_with_ts(self, key: int, value: Any) -> tuple[bool, Optional[int]]:
        self._check_key(key)
        self.epochs.enter()
        try:
            while True:
                preds, succs, level_found = self._find(key)
                if level_found != -1:
                    node = succs[level_found]
                    if not node.deleted:
                        # wait out a partially linked twin, then report dup
                        spins = 0
                        while not node.fully_linked:
                            spins = self._spin_pause(spins)
                        return False, None
                    continue  # key mid-removal; retry until unlinked
                top = self.random_level()
                locked: list[SkipNode] = []
                try:
                    valid = True
                    prev_pred = None
                    for level in range(top + 1):
                        pred, succ = preds[level], succs[level]
                        if pred is not prev_pred:
                            pred.lock.acquire()
                            locked.append(pred)
                            prev_pred = pred
                        if pred.deleted or succ.deleted or pred.next[level] is not succ:
                            valid = False
                            break
                    if not valid:
                        continue
                    node = SkipNode(key, value, top)
                    self.epochs.note_node_alloc()
                    for level in range(top + 1):
                        node.next[level] = succs[level]
                    bundles = [node.bundle, preds[0].bundle]
                    ts = prepare_bundles(
                        [(node.bundle, succs[0]), (preds[0].bundle, node)],
                        self.clock, self._spin)
                    self.epochs.note_entry_alloc(2)
                    for level in range(top + 1):
                        preds[level].next[level] = node
                    node.fully_linked = True
                    finalize_bundles(bundles, ts)
                    return True, ts
                finally:
                    for n in locked:
                        n.lock.release()
        finally:
            self.epochs.exit()

    def remove(self, key: int) -> bool:
        return self.remove_with_ts(key)[0]

    def remove_with_ts(self, key: int) -> tuple[bool, Optional[int]]:
        self._check_key(key)
        self.epochs.enter()
        try:
            preds, succs, level_found = self._find(key)
            if level_found == -1:
                return False, None
            victim = succs[level_found]
            if (not victim.fully_linked or victim.top_level != level_found
                    or victim.deleted):
                return False, None
            victim.lock.acquire()
            try:
                if victim.deleted:
                    return False, None
                # victim pinned: deletion requires its lock, which we hold
                while True:
                    locked: list[SkipNode] = []
                    try:
                        valid = True
                        prev_pred = None
                        for level in range(victim.top_level + 1):
                            pred = preds[level]
                            if pred is not prev_pred:
                                pred.lock.acquire()
                                locked.append(pred)
                                prev_pred = pred
                            if pred.deleted or pred.next[level] is not victim:
                                valid = False
                                break
                        if valid:
                            bundles = [preds[0].bundle, victim.bundle]
                            ts = prepare_bundles(
                                [(preds[0].bundle, victim.next[0]),
                                 (victim.bundle, self.head)],
                                self.clock, self._spin)
                            self.epochs.note_entry_alloc(2)
                            victim.deleted = True
                            for level in range(victim.top_level, -1, -1):
                                preds[level].next[level] = victim.next[level]
                            finalize_bundles(bundles, ts)
                            self.epochs.retire_node(victim)
                            return True, ts
                    finally:
                        for n in locked:
                            n.lock.release()
                    preds, succs, _ = self._find(key)
            finally:
                victim.lock.release()
        finally:
            self.epochs.exit()

    def _spin_pause(self, spins: int) -> int:
        return _pause(spins, self._spin)

    # -- reads --------------------------------------------------------------------

    def contains(self, key: int) -> bool:
        """Single-key probe at the infinitely large timestamp over the data
        layer; the index only shortens the uninstrumented approach."""
        self._check_key(key)
        self.epochs.enter()
        try:
            pred = self._data_pred(key)
            node = dereference_bundle(pred.bundle, CONTAINS_TS, self._spin)
            while node.key < key:
                node = dereference_bundle(node.bundle, CONTAINS_TS, self._spin)
            return node.key == key
        finally:
            self.epochs.exit()

    def range_query(self, low: int, high: int) -> list[tuple[int, Any]]:
        return self.range_query_ext(low, high).pairs

    def range_query_ext(self, low: int, high: int) -> RangeResult:
        self._check_range(low, high)
        self.epochs.enter()
        try:
            pred = self._data_pred(low)
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
        self._check_range(low, high)
        self.epochs.enter()
        try:
            ts = self.clock.read()
            pred = self._data_pred(low)
            pairs = []
            node = pred.next[0]
            while node.key <= high:
                if node.key >= low:
                    pairs.append((node.key, node.value))
                node = node.next[0]
            return pairs, ts
        finally:
            self.epochs.exit()

    def snapshot_range(self, low: int, high: int, ts: int) -> list[tuple[int, Any]]:
        self._check_range(low, high)
        self.epochs.enter()
        try:
            pred = self._data_pred(low)
            pairs, _ = collect_from(pred, low, high, ts, self._spin)
            return pairs
        finally:
            self.epochs.exit()

    def _check_range(self, low: int, high: int) -> None:
        self._check_key(low)
        self._check_key(high)
        if low > high:
            raise ValueError(f"empty range [{low}, {high}]")

    # -- reclamation / audit hooks ---------------------------------------------------

    def iter_bundles(self) -> Iterator[Bundle]:
        node = self.head
        while node is not None:
            yield node.bundle
            node = node.next[0] if node is not self.tail else None

    def live_counts(self) -> dict[str, int]:
        nodes = entries = 0
        node = self.head
        while node is not None:
            nodes += 1
            entries += sum(1 for _ in node.bundle.entries())
            node = node.next[0] if node is not self.tail else None
        return {"nodes": nodes, "entries": entries}

    # -- quiescent self-checks --------------------------------------------------

    def check_invariants(self) -> None:
        for level in range(MAX_LEVEL):
            node = self.head
            while node is not self.tail:
                nxt = node.next[level] if level <= node.top_level else None
                if nxt is None:
                    break
                assert node.key < nxt.key, f"level {level} keys not increasing"
                node = nxt
        node = self.head
        while node is not self.tail:
            nxt = node.next[0]
            target, ts = node.bundle.newest()
            assert ts != PENDING_TS, "pending bundle head at quiescence"
            assert target is nxt, "data-layer link and bundle head disagree"
            node = nxt
