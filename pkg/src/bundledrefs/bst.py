"""Unbalanced internal binary search tree with bundled child links.

Updates traverse optimistically inside read-side sections, lock the nodes
they change, validate, and version both child links of every touched node
through bundles. Removal of a node with two children replaces it with a
locked copy of its successor; up to six bundles change in one update, the
removed node's bundles are redirected to the root so stale traversals
rejoin a consistent path, and a wait-for-readers barrier drains in-flight
plain-link traversals before the displaced successor is unlinked.

Reads locate their target by a timestamped descent from the root over
bundles: with the snapshot fixed, every dereference lands exactly on the
snapshot tree, so no read can be torn by a concurrent successor
replacement. Range queries announce a clock read; membership probes do the
same with a single-key descent (see the module notes on why the
infinitely-large-timestamp shortcut used by the list is not sound here).
"""

from __future__ import annotations

import threading
from typing import Any, Callable, Iterator, Optional

from .core import (
    Bundle,
    DEFAULT_SPIN_BUDGET,
    GlobalClock,
    KEY_MAX,
    KEY_MIN,
    PENDING_TS,
    dereference_bundle,
    finalize_bundles,
    prepare_bundles,
)
from .linkedlist import RangeResult
from .reclamation import EpochManager

LEFT = 0
RIGHT = 1


class TreeNode:
    __slots__ = ("key", "value", "lock", "deleted", "left", "right",
                 "left_bundle", "right_bundle")

    def __init__(self, key: int, value: Any,
                 left: Optional["TreeNode"] = None,
                 right: Optional["TreeNode"] = None) -> None:
        self.key = key
        self.value = value
        self.lock = threading.Lock()
        self.deleted = False
        self.left = left
        self.right = right
        self.left_bundle = Bundle()
        self.right_bundle = Bundle()

    def child(self, direction: int) -> "TreeNode":
        return self.left if direction == LEFT else self.right

    def set_child(self, direction: int, node: "TreeNode") -> None:
        if direction == LEFT:
            self.left = node
        else:
            self.right = node

    def child_bundle(self, direction: int) -> Bundle:
        return self.left_bundle if direction == LEFT else self.right_bundle

    def bundle_refs(self) -> tuple[Bundle, ...]:
        return (self.left_bundle, self.right_bundle)

    def poison(self) -> None:
        self.key = None
        self.value = None
        self.left = None
        self.right = None
        self.left_bundle = None
        self.right_bundle = None

    def __repr__(self) -> str:  # pragma: no cover
        return f"TreeNode({self.key})"


class BundledTree:
    """Concurrent sorted set over an unbalanced internal BST."""

    name = "bst"

    def __init__(self, *, clock: Optional[GlobalClock] = None,
                 epochs: Optional[EpochManager] = None,
                 rq_reads_advance_clock: bool = False,
                 spin_budget: int = DEFAULT_SPIN_BUDGET) -> None:
        self.clock = clock or GlobalClock()
        self.epochs = epochs or EpochManager(self.clock, spin_budget)
        self._spin = spin_budget
        self._rq_advance = rq_reads_advance_clock
        # Absent children point at a distinguished sentinel node, never at a
        # null, so every bundle target stays dereferenceable.
        self.absent = TreeNode(None, None)
        self.absent.left_bundle.init_entry(self.absent)
        self.absent.right_bundle.init_entry(self.absent)
        self.root = TreeNode(KEY_MAX, None, self.absent, self.absent)
        self.root.left_bundle.init_entry(self.absent)
        self.root.right_bundle.init_entry(self.absent)
        self.epochs.note_node_alloc(2)
        self.epochs.note_entry_alloc(4)

    # -- helpers -----------------------------------------------------------

    @staticmethod
    def _check_key(key: int) -> None:
        if not (KEY_MIN < key < KEY_MAX):
            raise ValueError(f"key {key!r} outside the usable key space")

    def _check_range(self, low: int, high: int) -> None:
        self._check_key(low)
        self._check_key(high)
        if low > high:
            raise ValueError(f"empty range [{low}, {high}]")

    def _traverse(self, key: int) -> tuple[TreeNode, TreeNode, int]:
        """Plain-link locate inside a read-side section: (pred, curr, dir);
        curr is the node holding key or the absent sentinel."""
        absent = self.absent
        self.epochs.begin_traversal()
        try:
            pred = self.root
            direction = LEFT
            curr = pred.left
            while curr is not absent and curr.key != key:
                pred = curr
                direction = LEFT if key < curr.key else RIGHT
                curr = curr.left if direction == LEFT else curr.right
            return pred, curr, direction
        finally:
            self.epochs.end_traversal()

    # -- updates ------------------------------------------------------------

    def insert(self, key: int, value: Any) -> bool:
        return self.insert_with_ts(key, value)[0]

    def insert_with_ts(self, key: int, value: Any) -> tuple[bool, Optional[int]]:
        """Leaf insert: the new node's two bundles target the absent
        sentinel and the parent's direction bundle targets the new node."""
        self._check_key(key)
        absent = self.absent
        self.epochs.enter()
        try:
            while True:
                pred, curr, direction = self._traverse(key)
                if curr is not absent:
                    if curr.deleted:
                        continue  # mid-removal; retry for the final answer
                    return False, None
                with pred.lock:
                    if pred.deleted or pred.child(direction) is not absent:
                        continue
                    node = TreeNode(key, value, absent, absent)
                    self.epochs.note_node_alloc()
                    targets = [(node.left_bundle, absent),
                               (node.right_bundle, absent),
                               (pred.child_bundle(direction), node)]
                    bundles = [b for b, _ in targets]
                    ts = prepare_bundles(targets, self.clock, self._spin)
                    self.epochs.note_entry_alloc(len(targets))
                    pred.set_child(direction, node)
                    finalize_bundles(bundles, ts)
                    return True, ts
        finally:
            self.epochs.exit()

    def remove(self, key: int) -> bool:
        return self.remove_with_ts(key)[0]

    def remove_with_ts(self, key: int) -> tuple[bool, Optional[int]]:
        self._check_key(key)
        absent = self.absent
        self.epochs.enter()
        try:
            while True:
                pred, curr, direction = self._traverse(key)
                if curr is absent:
                    return False, None
                with pred.lock, curr.lock:
                    if (pred.deleted or curr.deleted
                            or pred.child(direction) is not curr):
                        continue
                    left, right = curr.left, curr.right
                    if left is absent or right is absent:
                        # zero children: unlink to absent; one child: splice
                        heir = absent if (left is absent and right is absent) \
                            else (right if left is absent else left)
                        targets = [(pred.child_bundle(direction), heir),
                                   (curr.left_bundle, self.root),
                                   (curr.right_bundle, self.root)]
                        bundles = [b for b, _ in targets]
                        ts = prepare_bundles(targets, self.clock, self._spin)
                        self.epochs.note_entry_alloc(len(targets))
                        curr.deleted = True
                        pred.set_child(direction, heir)
                        finalize_bundles(bundles, ts)
                        self.epochs.retire_node(curr)
                        return True, ts
                    done, ts = self._remove_two_children(
                        pred, curr, direction, left, right)
                    if done:
                        return True, ts
        finally:
            self.epochs.exit()

    def _remove_two_children(self, pred: TreeNode, curr: TreeNode,
                             direction: int, left: TreeNode,
                             right: TreeNode) -> tuple[bool, Optional[int]]:
        """Successor replacement under pred/curr locks; returns (False, None)
        if the successor could not be pinned and the caller must retry."""
        absent = self.absent
        # pin the leftmost node of the right subtree and its parent
        while True:
            succ_parent, succ = curr, right
            while succ.left is not absent:
                succ_parent, succ = succ, succ.left
            held: list[TreeNode] = []
            if succ_parent is not curr:
                succ_parent.lock.acquire()
                held.append(succ_parent)
            succ.lock.acquire()
            held.append(succ)
            if (not succ.deleted and succ.left is absent
                    and not succ_parent.deleted
                    and (succ_parent.right is succ if succ_parent is curr
                         else succ_parent.left is succ)):
                break
            # successor-side churn: re-walk the spine (curr.right is stable
            # while curr stays locked)
            for node in reversed(held):
                node.lock.release()
        try:
            # locked copy of the successor takes over curr's position
            copy_right = succ.right if succ_parent is curr else right
            copy = TreeNode(succ.key, succ.value, left, copy_right)
            copy.lock.acquire()
            held.append(copy)
            self.epochs.note_node_alloc()
            targets = [(copy.left_bundle, left),
                       (copy.right_bundle, copy_right),
                       (pred.child_bundle(direction), copy),
                       (curr.left_bundle, self.root),
                       (curr.right_bundle, self.root)]
            if succ_parent is not curr:
                targets.append((succ_parent.left_bundle, succ.right))
            bundles = [b for b, _ in targets]
            ts = prepare_bundles(targets, self.clock, self._spin)
            self.epochs.note_entry_alloc(len(targets))
            curr.deleted = True
            succ.deleted = True
            pred.set_child(direction, copy)
            # drain plain-link traversals before the displaced successor
            # leaves its old position
            self.epochs.wait_for_readers()
            if succ_parent is not curr:
                succ_parent.set_child(LEFT, succ.right)
            finalize_bundles(bundles, ts)
            self.epochs.retire_node(curr)
            self.epochs.retire_node(succ)
            return True, ts
        finally:
            for node in reversed(held):
                node.lock.release()

    # -- reads ----------------------------------------------------------------

    def contains(self, key: int) -> bool:
        """Membership at an announced clock read.

        A single-key descent at the infinitely large timestamp is not sound
        for this tree: a successor replacement moves a key upward, and a
        probe that already descended past the copy's position would miss the
        key even though it was present throughout. Fixing the snapshot makes
        every dereference land on the snapshot tree.
        """
        self._check_key(key)
        absent = self.absent
        self.epochs.enter()
        try:
            self.epochs.rq_set_pending()
            ts = self.clock.read()
            self.epochs.rq_announce(ts)
            try:
                node = self.root
                while node is not absent:
                    if node.key == key:
                        return True
                    bundle = (node.left_bundle if key < node.key
                              else node.right_bundle)
                    node = dereference_bundle(bundle, ts, self._spin)
                return False
            finally:
                self.epochs.rq_clear()
        finally:
            self.epochs.exit()

    def range_query(self, low: int, high: int) -> list[tuple[int, Any]]:
        return self.range_query_ext(low, high).pairs

    def range_query_ext(self, low: int, high: int,
                        on_visit: Optional[Callable] = None) -> RangeResult:
        """Timestamped descent to the subtree covering the range, then an
        explicit-stack DFS over bundles; result sorted once at the end."""
        self._check_range(low, high)
        self.epochs.enter()
        try:
            self.epochs.rq_set_pending()
            ts = self.clock.advance() if self._rq_advance else self.clock.read()
            self.epochs.rq_announce(ts)
            try:
                pairs, derefs = self._collect(low, high, ts, on_visit)
            finally:
                self.epochs.rq_clear()
            return RangeResult(pairs, ts, derefs)
        finally:
            self.epochs.exit()

    def _collect(self, low: int, high: int, ts: int,
                 on_visit: Optional[Callable] = None):
        absent = self.absent
        derefs = 0
        # enter-range: descend to the first node inside the range; its
        # subtree covers everything the query can return
        node = self.root
        while node is not absent and not (low <= node.key <= high):
            if on_visit is not None:
                on_visit(node)
            bundle = node.left_bundle if node.key > high else node.right_bundle
            node = dereference_bundle(bundle, ts, self._spin)
            derefs += 1
        pairs: list[tuple[int, Any]] = []
        if node is absent:
            return pairs, derefs
        # collect-range: DFS, pushing children chosen by the key-vs-range
        # comparison; nodes outside the range sit on the boundary paths
        stack = [node]
        while stack:
            node = stack.pop()
            if node is absent:
                continue
            if on_visit is not None:
                on_visit(node)
            if node.key < low:
                stack.append(dereference_bundle(node.right_bundle, ts, self._spin))
                derefs += 1
            elif node.key > high:
                stack.append(dereference_bundle(node.left_bundle, ts, self._spin))
                derefs += 1
            else:
                pairs.append((node.key, node.value))
                stack.append(dereference_bundle(node.left_bundle, ts, self._spin))
                stack.append(dereference_bundle(node.right_bundle, ts, self._spin))
                derefs += 2
        pairs.sort()
        return pairs, derefs

    def range_query_unsafe(self, low: int, high: int) -> tuple[list, int]:
        """Uninstrumented DFS over plain links; NOT linearizable."""
        self._check_range(low, high)
        absent = self.absent
        self.epochs.enter()
        try:
            ts = self.clock.read()
            pairs = []
            stack = [self.root.left]
            while stack:
                node = stack.pop()
                if node is absent:
                    continue
                if node.key < low:
                    stack.append(node.right)
                elif node.key > high:
                    stack.append(node.left)
                else:
                    pairs.append((node.key, node.value))
                    stack.append(node.left)
                    stack.append(node.right)
            pairs.sort()
            return pairs, ts
        finally:
            self.epochs.exit()

    def snapshot_range(self, low: int, high: int, ts: int) -> list[tuple[int, Any]]:
        """Replay the range at an explicit timestamp (tests/self-checks)."""
        self._check_range(low, high)
        self.epochs.enter()
        try:
            pairs, _ = self._collect(low, high, ts)
            return pairs
        finally:
            self.epochs.exit()

    # -- reclamation / audit hooks -----------------------------------------------

    def iter_bundles(self) -> Iterator[Bundle]:
        absent = self.absent
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node.left_bundle
            yield node.right_bundle
            if node.left is not absent:
                stack.append(node.left)
            if node.right is not absent:
                stack.append(node.right)

    def live_counts(self) -> dict[str, int]:
        nodes = 2  # root and absent sentinels
        entries = sum(1 for _ in self.absent.left_bundle.entries())
        entries += sum(1 for _ in self.absent.right_bundle.entries())
        absent = self.absent
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node is not self.root:
                nodes += 1
            entries += sum(1 for _ in node.left_bundle.entries())
            entries += sum(1 for _ in node.right_bundle.entries())
            if node.left is not absent:
                stack.append(node.left)
            if node.right is not absent:
                stack.append(node.right)
        return {"nodes": nodes, "entries": entries}

    # -- quiescent self-checks ------------------------------------------------

    def in_order_keys(self) -> list[int]:
        absent = self.absent
        out: list[int] = []
        stack: list[tuple[TreeNode, bool]] = [(self.root.left, False)]
        while stack:
            node, expanded = stack.pop()
            if node is absent:
                continue
            if expanded:
                out.append(node.key)
            else:
                stack.append((node.right, False))
                stack.append((node, True))
                stack.append((node.left, False))
        return out

    def check_invariants(self) -> None:
        keys = self.in_order_keys()
        assert keys == sorted(set(keys)), "in-order walk not strictly sorted"
        absent = self.absent
        stack = [self.root]
        while stack:
            node = stack.pop()
            for direction in (LEFT, RIGHT):
                target, ts = node.child_bundle(direction).newest()
                assert ts != PENDING_TS, "pending bundle head at quiescence"
                assert target is node.child(direction), \
                    "child link and bundle head disagree"
            if node.left is not absent:
                stack.append(node.left)
            if node.right is not absent:
                stack.append(node.right)
