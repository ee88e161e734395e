"""Epoch-based reclamation plus retirement of outdated bundle entries.

Workers bracket every structure operation with ``enter``/``exit``. Removed
nodes and superseded bundle entries go to per-thread limbo lists tagged with
the epoch of retirement; an object retired in epoch ``e`` is freed only once
the global epoch reaches ``e + 2``, and the epoch advances only when every
thread inside an operation has announced the current epoch.

"Freeing" in Python means poisoning: the object's fields are replaced so
that any later touch raises :class:`UseAfterFreeError`. Together with the
allocation/free counters this plays the role a race/memory sanitizer plays
for native builds.

Bundle-entry retirement is gated by the oldest active range query,
announced through a per-thread slot table: a slot is *pending* between a
range query's clock read and its announcement, so a cleanup scan can never
miss a query that has already fixed its snapshot.
"""

from __future__ import annotations

import threading
from typing import Any, Iterable, Optional

from .core import Bundle, GlobalClock, PENDING_TS, _pause, DEFAULT_SPIN_BUDGET

RQ_INACTIVE = -1
RQ_PENDING = -2

_KIND_NODE = 0
_KIND_ENTRY = 1


class UseAfterFreeError(RuntimeError):
    """A reclaimed node or bundle entry was dereferenced."""


class _Poison:
    """Placed in freed objects' fields; any attribute access raises."""

    __slots__ = ()

    def __getattr__(self, name: str) -> Any:
        raise UseAfterFreeError(f"access to .{name} of a reclaimed object")


POISON = _Poison()


class _ThreadSlot:
    __slots__ = ("name", "epoch", "depth", "trav_active", "trav_seq",
                 "rq_state", "limbo", "nodes_allocated", "nodes_freed",
                 "entries_allocated", "entries_freed")

    def __init__(self, name: str) -> None:
        self.name = name
        self.epoch = -1            # announced epoch; -1 while quiescent
        self.depth = 0             # enter/exit nesting guard
        self.trav_active = False   # inside a plain-link traversal section
        self.trav_seq = 0
        self.rq_state = RQ_INACTIVE
        self.limbo: list[tuple[int, int, Any]] = []
        self.nodes_allocated = 0
        self.nodes_freed = 0
        self.entries_allocated = 0
        self.entries_freed = 0


class EpochManager:
    """Epochs, limbo lists, the active-range-query table, and audit counters.

    One manager serves one data structure. Threads are registered lazily on
    first use; each gets a slot holding its epoch announcement, its
    range-query announcement, and its limbo list.
    """

    #: retire calls between opportunistic advance/free attempts
    _ADVANCE_EVERY = 64

    def __init__(self, clock: GlobalClock,
                 spin_budget: int = DEFAULT_SPIN_BUDGET) -> None:
        self._clock = clock
        self._spin_budget = spin_budget
        self._lock = threading.Lock()
        self._slots: list[_ThreadSlot] = []
        self._local = threading.local()
        self.global_epoch = 0
        self._threshold = 0
        #: retirement threshold after each cleanup pass (audited monotone)
        self.threshold_log: list[int] = []

    # -- thread slots ----------------------------------------------------

    def _slot(self) -> _ThreadSlot:
        slot = getattr(self._local, "slot", None)
        if slot is None:
            slot = _ThreadSlot(threading.current_thread().name)
            with self._lock:
                self._slots.append(slot)
            self._local.slot = slot
        return slot

    def _slots_snapshot(self) -> list[_ThreadSlot]:
        with self._lock:
            return list(self._slots)

    # -- operation brackets ----------------------------------------------

    def enter(self) -> None:
        """Announce the current epoch; brackets every structure operation."""
        slot = self._slot()
        assert slot.depth == 0, "unbalanced epoch enter"
        slot.epoch = self.global_epoch
        slot.depth = 1

    def exit(self) -> None:
        slot = self._slot()
        assert slot.depth == 1, "unbalanced epoch exit"
        slot.depth = 0
        slot.epoch = -1
        if slot.limbo:
            self._free_expired(slot)

    # -- plain-link traversal sections (read-side critical sections) ------

    def begin_traversal(self) -> None:
        slot = self._slot()
        slot.trav_active = True

    def end_traversal(self) -> None:
        slot = self._slot()
        slot.trav_active = False
        slot.trav_seq += 1

    def wait_for_readers(self) -> None:
        """Block until every plain-link traversal in flight right now ends.

        Used by copy-based removal before displaced nodes are unlinked from
        plain paths. Traversal sections never block on locks, so this wait
        is bounded; the caller's own slot is excluded.
        """
        me = self._slot()
        snapshot = [(s, s.trav_seq) for s in self._slots_snapshot()
                    if s is not me and s.trav_active]
        spins = 0
        for slot, seq in snapshot:
            while slot.trav_active and slot.trav_seq == seq:
                spins = _pause(spins, self._spin_budget)

    # -- retirement and freeing -------------------------------------------

    def retire_node(self, node: Any) -> None:
        """Limbo a node that is unreachable at all timestamps at or above
        the retirement threshold. Its remaining bundle entries ride along."""
        slot = self._slot()
        slot.limbo.append((self.global_epoch, _KIND_NODE, node))
        if len(slot.limbo) % self._ADVANCE_EVERY == 0:
            self.try_advance_epoch()
            self._free_expired(slot)

    def retire_entry(self, entry: Any) -> None:
        slot = self._slot()
        slot.limbo.append((self.global_epoch, _KIND_ENTRY, entry))

    def try_advance_epoch(self) -> bool:
        """Advance iff every thread inside an operation has announced the
        current epoch; quiescent threads do not block the advance."""
        with self._lock:
            epoch = self.global_epoch
            for slot in self._slots:
                if slot.depth > 0 and slot.epoch != epoch:
                    return False
            self.global_epoch = epoch + 1
            return True

    def _free_expired(self, slot: _ThreadSlot) -> None:
        horizon = self.global_epoch - 2
        if not slot.limbo or slot.limbo[0][0] > horizon:
            return
        keep = []
        for retired_epoch, kind, obj in slot.limbo:
            if retired_epoch <= horizon:
                self._free(slot, kind, obj)
            else:
                keep.append((retired_epoch, kind, obj))
        slot.limbo = keep

    def _free(self, slot: _ThreadSlot, kind: int, obj: Any) -> None:
        if kind == _KIND_NODE:
            for bundle in obj.bundle_refs():
                entry = bundle.head
                while entry is not None:
                    nxt = entry.next_entry
                    self._poison_entry(slot, entry)
                    entry = nxt
            obj.poison()
            slot.nodes_freed += 1
        else:
            self._poison_entry(slot, obj)

    def _poison_entry(self, slot: _ThreadSlot, entry: Any) -> None:
        entry.target = POISON
        entry.next_entry = None
        slot.entries_freed += 1

    # -- allocation audit ---------------------------------------------------

    def note_node_alloc(self, n: int = 1) -> None:
        self._slot().nodes_allocated += n

    def note_entry_alloc(self, n: int = 1) -> None:
        self._slot().entries_allocated += n

    def audit_counts(self) -> dict[str, int]:
        counts = {"nodes_allocated": 0, "nodes_freed": 0,
                  "entries_allocated": 0, "entries_freed": 0, "limbo": 0}
        for slot in self._slots_snapshot():
            counts["nodes_allocated"] += slot.nodes_allocated
            counts["nodes_freed"] += slot.nodes_freed
            counts["entries_allocated"] += slot.entries_allocated
            counts["entries_freed"] += slot.entries_freed
            counts["limbo"] += len(slot.limbo)
        return counts

    def drain(self, max_rounds: int = 8) -> None:
        """Shutdown path: with no operations in flight, advance epochs and
        free every limbo object so the allocation audit can balance."""
        for slot in self._slots_snapshot():
            assert slot.depth == 0, "drain with an operation in flight"
        for _ in range(max_rounds):
            if not any(s.limbo for s in self._slots_snapshot()):
                return
            self.try_advance_epoch()
            for slot in self._slots_snapshot():
                self._free_expired(slot)
        raise RuntimeError("limbo lists failed to drain")

    # -- active range query table ------------------------------------------

    def rq_set_pending(self) -> None:
        """Mark this thread's slot pending; call just before the clock read."""
        self._slot().rq_state = RQ_PENDING

    def rq_announce(self, ts: int) -> None:
        self._slot().rq_state = ts

    def rq_clear(self) -> None:
        self._slot().rq_state = RQ_INACTIVE

    def oldest_active_ts(self) -> int:
        """Retirement threshold: the oldest announced snapshot, waiting out
        pending slots; the clock's current value when none are active.
        Successive results never decrease.

        The clock fallback is read *before* the slot scan: a query whose
        slot the scan saw as inactive either had already finished, or will
        read the clock after this floor and can only announce a timestamp
        at or above it. Reading the clock after the scan would race a
        concurrent announcement and overshoot a live snapshot.
        """
        assert self._slot().depth > 0, "oldest_active_ts outside an epoch section"
        floor = self._clock.read()
        lowest: Optional[int] = None
        spins = 0
        for slot in self._slots_snapshot():
            state = slot.rq_state
            while state == RQ_PENDING:
                spins = _pause(spins, self._spin_budget)
                state = slot.rq_state
            if state != RQ_INACTIVE and (lowest is None or state < lowest):
                lowest = state
        if lowest is None:
            lowest = floor
        with self._lock:
            if lowest > self._threshold:
                self._threshold = lowest
            return self._threshold


def trim_bundle(bundle: Bundle, threshold: int, manager: EpochManager) -> int:
    """Retire every entry superseded for all timestamps >= threshold.

    Keeps the newest entry stamped <= threshold (it satisfies the oldest
    live query and all future ones) and cuts everything older. The head
    entry is never retired. Returns the number of entries retired.
    """
    entry = bundle.head
    if entry is None:
        return 0
    while entry.ts > threshold:  # pending heads rank above any threshold
        nxt = entry.next_entry
        if nxt is None:
            return 0
        entry = nxt
    cut = entry.next_entry
    if cut is None:
        return 0
    entry.next_entry = None
    retired = 0
    while cut is not None:
        nxt = cut.next_entry
        manager.retire_entry(cut)
        retired += 1
        cut = nxt
    return retired


def cleanup_pass(structure: Any) -> int:
    """One background pass over a structure's bundles.

    Runs inside an epoch section; recomputes the retirement threshold per
    bundle (it only grows) and trims superseded entries. Returns the number
    of entries retired.
    """
    manager: EpochManager = structure.epochs
    manager.enter()
    retired = 0
    try:
        threshold = None
        for bundle in structure.iter_bundles():
            threshold = manager.oldest_active_ts()
            retired += trim_bundle(bundle, threshold, manager)
        if threshold is None:
            threshold = manager.oldest_active_ts()
        manager.threshold_log.append(threshold)
        manager.try_advance_epoch()
    finally:
        manager.exit()
    return retired


class CleanupWorker:
    """Dedicated background thread running cleanup passes at an interval."""

    def __init__(self, structure: Any, interval_s: float = 0.010) -> None:
        self._structure = structure
        self._interval = interval_s
        self._stop = threading.Event()
        self._thread = threading.Thread(
            target=self._loop, name="bundle-cleanup", daemon=True)

    def start(self) -> None:
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread.is_alive():
            self._thread.join()

    def _loop(self) -> None:
        while not self._stop.wait(self._interval):
            cleanup_pass(self._structure)
