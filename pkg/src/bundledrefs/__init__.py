"""Concurrent ordered maps with per-link version bundles.

Three lock-based sorted-set structures (linked list, skip list, binary
search tree) share one building block: every link carries a bundle of
timestamped past values, giving range queries a consistent path through
any concurrent history. A workload harness, a timestamp-replay
linearizability oracle, and a CLI round out the package.
"""

from .core import (
    Bundle,
    BundleEntry,
    CONTAINS_TS,
    ClockOverflowError,
    GlobalClock,
    KEY_MAX,
    KEY_MIN,
    PENDING_TS,
    ReclamationHorizonError,
    bundle_newest,
    dereference_bundle,
    finalize_bundles,
    prepare_bundles,
)
from .reclamation import CleanupWorker, EpochManager, UseAfterFreeError, cleanup_pass
from .linkedlist import BundledLinkedList, RangeResult
from .skiplist import BundledSkipList
from .bst import BundledTree

__all__ = [
    "Bundle",
    "BundleEntry",
    "BundledLinkedList",
    "BundledSkipList",
    "BundledTree",
    "CONTAINS_TS",
    "CleanupWorker",
    "ClockOverflowError",
    "EpochManager",
    "GlobalClock",
    "KEY_MAX",
    "KEY_MIN",
    "PENDING_TS",
    "RangeResult",
    "ReclamationHorizonError",
    "UseAfterFreeError",
    "bundle_newest",
    "cleanup_pass",
    "dereference_bundle",
    "finalize_bundles",
    "prepare_bundles",
]
