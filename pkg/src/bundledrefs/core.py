"""Global logical clock and per-link version bundles.

A *bundle* shadows one link of a linked data structure and records every
value that link has held, newest first, each entry stamped with the logical
time of the update that installed it. Updates book-end their critical
section with ``prepare_bundles`` / ``finalize_bundles``; readers resolve a
link at a fixed logical time with ``dereference_bundle``.

Memory-ordering contract (met trivially by CPython's interpreter lock, and
by the swap lock inside ``Bundle`` otherwise): installing and finalizing an
entry are release-publications, reading a head and its timestamp are
acquire-reads, and advancing the clock is a sequentially ordered
read-modify-write.
"""

from __future__ import annotations

import threading
import time
from typing import Any, Iterator, Optional

#: Reserved sentinel timestamp: an entry is *pending* (installed but not yet
#: stamped) while its ``ts`` equals this. Finalized timestamps are always
#: strictly smaller.
PENDING_TS = (1 << 64) - 1

#: "Infinitely large" query timestamp used by membership probes that skip
#: reading the clock: newer than every finalized timestamp, but never pending.
CONTAINS_TS = PENDING_TS - 1

#: Sentinel keys for the structures built on top of bundles. User keys must
#: lie strictly inside the open interval (KEY_MIN, KEY_MAX).
KEY_MIN = -(1 << 63)
KEY_MAX = (1 << 63) - 1

#: Iterations of busy-waiting on a pending entry before yielding the core.
DEFAULT_SPIN_BUDGET = 100


class ClockOverflowError(RuntimeError):
    """The logical clock would reach the reserved sentinel range."""


class ReclamationHorizonError(RuntimeError):
    """A bundle held no entry satisfying the requested timestamp.

    Can only happen when entries older than the retirement threshold are
    queried; that is a reclamation-policy violation, not a data race.
    """


def _pause(spins: int, budget: int) -> int:
    """One step of a bounded-spin-then-yield wait loop."""
    spins += 1
    if spins >= budget:
        time.sleep(0)
        return 0
    return spins


class GlobalClock:
    """64-bit logical time; advancing it is the linearization point of updates.

    ``advance`` results across all threads form the contiguous sequence
    1, 2, 3, ... with no duplicates. A dedicated object (rather than a bare
    counter in some shared namespace) keeps the hot word isolated.
    """

    __slots__ = ("_lock", "_now")

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._now = 0

    def read(self) -> int:
        """Current time; every update whose advance happened before this
        read has a timestamp <= the returned value."""
        return self._now

    def advance(self) -> int:
        """Atomically increment and return the new value."""
        with self._lock:
            ts = self._now + 1
            if ts >= CONTAINS_TS:
                raise ClockOverflowError("logical clock exhausted")
            self._now = ts
            return ts


class BundleEntry:
    """One record in a bundle: a link target plus its stamp.

    ``ts`` transitions exactly once, from PENDING_TS to its final value.
    ``target`` never changes after the entry is published at a bundle head.
    ``next_entry`` points at the next-older entry (None terminates the list);
    it is only rewritten by the reclamation trim, which cuts dead tails.
    """

    __slots__ = ("target", "ts", "next_entry")

    def __init__(self, target: Any, ts: int = PENDING_TS,
                 next_entry: Optional["BundleEntry"] = None) -> None:
        self.target = target
        self.ts = ts
        self.next_entry = next_entry

    def __repr__(self) -> str:  # pragma: no cover
        ts = "PENDING" if self.ts == PENDING_TS else self.ts
        return f"BundleEntry(ts={ts}, target={self.target!r})"


class Bundle:
    """Newest-first list of entries shadowing one link.

    At most one pending entry exists at a time and only at the head;
    finalized entries appear in strictly decreasing timestamp order. A
    published bundle always holds at least one entry (a structure-time
    link starts with an entry stamped 0; links created by an update get
    their first entry through the prepare/finalize protocol instead).
    """

    __slots__ = ("head", "_swap_lock")

    def __init__(self) -> None:
        self.head: Optional[BundleEntry] = None
        self._swap_lock = threading.Lock()

    def init_entry(self, target: Any) -> None:
        """Install the construction-time entry (timestamp 0)."""
        assert self.head is None, "init_entry on a non-empty bundle"
        self.head = BundleEntry(target, ts=0)

    def compare_and_swap_head(self, expected: Optional[BundleEntry],
                              new: BundleEntry) -> bool:
        with self._swap_lock:
            if self.head is expected:
                self.head = new
                return True
            return False

    def newest(self) -> tuple[Any, int]:
        """Head entry's (target, ts); non-blocking, ts may be PENDING_TS."""
        head = self.head
        assert head is not None, "newest() on an unpublished bundle"
        return head.target, head.ts

    def entries(self) -> Iterator[BundleEntry]:
        """Walk entries newest-first (tests, cleanup, invariant checks)."""
        entry = self.head
        while entry is not None:
            yield entry
            entry = entry.next_entry

    def __repr__(self) -> str:  # pragma: no cover
        parts = ", ".join(repr(e) for e in self.entries())
        return f"Bundle([{parts}])"


def prepare_bundles(targets: list[tuple[Bundle, Any]], clock: GlobalClock,
                    spin_budget: int = DEFAULT_SPIN_BUDGET) -> int:
    """Install a pending entry at each bundle head, then advance the clock.

    ``targets`` pairs each bundle with the new value its link will take and
    must be the complete set of bundles the update changes, in the caller's
    order. The caller must already hold the data-structure locks its
    operation requires (every prepared bundle belongs to a locked node or a
    node not yet published). If a head entry is pending it belongs to
    another in-flight update and the installer waits it out, which is what
    orders concurrent updates to the same bundle.

    Returns the update's linearization timestamp; the caller performs its
    original critical section and then calls :func:`finalize_bundles`.
    """
    for bundle, target in targets:
        entry = BundleEntry(target)
        spins = 0
        while True:
            expected = bundle.head
            entry.next_entry = expected
            while True:
                head = bundle.head
                if head is None or head.ts != PENDING_TS:
                    break
                spins = _pause(spins, spin_budget)
            if bundle.compare_and_swap_head(expected, entry):
                break
    return clock.advance()


def finalize_bundles(bundles: list[Bundle], ts: int) -> None:
    """Stamp each bundle's pending head with the linearization timestamp.

    Precondition: every head is the pending entry installed by this update's
    prepare, and the operation's original critical section has completed.
    A non-pending head here is a logic fault, not a race: a pending head
    blocks every other installer until it is finalized.
    """
    for bundle in bundles:
        head = bundle.head
        assert head is not None and head.ts == PENDING_TS, \
            "finalize on a bundle without this update's pending entry"
        head.ts = ts


def dereference_bundle(bundle: Bundle, ts: int,
                       spin_budget: int = DEFAULT_SPIN_BUDGET) -> Any:
    """Return the link value visible at logical time ``ts``.

    Waits while the head entry is pending, then returns the target of the
    newest entry stamped <= ts. ``ts`` must be below PENDING_TS and at or
    above the retirement threshold of the owning structure.
    """
    entry = bundle.head
    assert entry is not None, "dereference on an unpublished bundle"
    spins = 0
    while entry.ts == PENDING_TS:
        spins = _pause(spins, spin_budget)
    while entry is not None and entry.ts > ts:
        entry = entry.next_entry
    if entry is None:
        raise ReclamationHorizonError(
            f"no entry satisfies ts={ts}; older than the retirement horizon")
    return entry.target


def bundle_newest(bundle: Bundle) -> tuple[Any, int]:
    """Head entry's (target, ts) without blocking on a pending stamp."""
    return bundle.newest()
