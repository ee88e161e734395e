"""Workload runner, throughput accounting, and the replay oracle.

Every successful update records the timestamp returned by its bundle
preparation, which is its exact linearization point; the oracle replays
that total order and checks each range query's result against the replayed
state at its snapshot timestamp, and each membership probe against the
replayed states across its clock window. No inference, no tolerance:
a single mismatched key is a violation.
"""

from __future__ import annotations

import csv
import os
import random
import sys
import threading
import time
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Any, NamedTuple, Optional

from .bst import BundledTree
from .linkedlist import BundledLinkedList
from .reclamation import CleanupWorker
from .skiplist import BundledSkipList

STRUCTURES = ("list", "skiplist", "bst")

#: per-structure default key ranges (desk-scale overridable)
DEFAULT_KEY_RANGE = {"list": 10_000, "skiplist": 1_000_000, "bst": 1_000_000}


@dataclass
class WorkloadConfig:
    """One benchmark/validation run.

    ``mix`` is (update %, contains %, range query %), written U-C-RQ.
    Updates split evenly between inserts and removes. ``ops_per_thread``
    switches from a timed run to a fixed op count (deterministic runs).
    """

    structure: str = "list"
    threads: int = 1
    duration_s: float = 3.0
    mix: tuple[int, int, int] = (10, 80, 10)
    key_range: int = 10_000
    rq_size: int = 50
    seed: int = 1
    rq_advance: bool = False
    validate: bool = False
    unsafe_rq: bool = False
    cleanup: bool = True
    cleanup_interval_ms: float = 10.0
    dedicated: bool = False
    ops_per_thread: Optional[int] = None

    def __post_init__(self) -> None:
        if self.structure not in STRUCTURES:
            raise ValueError(f"unknown structure {self.structure!r}")
        if len(self.mix) != 3 or any(p < 0 for p in self.mix):
            raise ValueError(f"bad mix {self.mix!r}")
        if sum(self.mix) != 100:
            raise ValueError(f"mix {self.mix!r} does not sum to 100")
        if self.threads < 1:
            raise ValueError("need at least one thread")
        if self.key_range < 2 * self.rq_size:
            raise ValueError("key range must be at least twice the range size")
        if self.duration_s <= 0 and self.ops_per_thread is None:
            raise ValueError("duration must be positive")

    @property
    def workload_label(self) -> str:
        return "-".join(str(p) for p in self.mix)


def parse_mix(text: str) -> tuple[int, int, int]:
    parts = text.split("-")
    if len(parts) != 3:
        raise ValueError(f"mix must be U-C-RQ, got {text!r}")
    mix = tuple(int(p) for p in parts)
    if sum(mix) != 100 or any(p < 0 for p in mix):
        raise ValueError(f"mix {text!r} does not sum to 100")
    return mix  # type: ignore[return-value]


def make_structure(cfg: WorkloadConfig):
    if cfg.structure == "list":
        return BundledLinkedList(rq_reads_advance_clock=cfg.rq_advance)
    if cfg.structure == "skiplist":
        return BundledSkipList(rq_reads_advance_clock=cfg.rq_advance,
                               seed=cfg.seed)
    return BundledTree(rq_reads_advance_clock=cfg.rq_advance)


# -- logs ---------------------------------------------------------------------


class OpLogEntry(NamedTuple):
    kind: str  # "insert" | "remove"
    key: int
    ts: int


class RqLogEntry(NamedTuple):
    low: int
    high: int
    ts: int
    keys: tuple[int, ...]
    collect_derefs: Optional[int]


class ContainsLogEntry(NamedTuple):
    key: int
    result: bool
    c1: int
    c2: int


class RqViolation(NamedTuple):
    low: int
    high: int
    ts: int
    expected: tuple[int, ...]
    actual: tuple[int, ...]


class ContainsViolation(NamedTuple):
    key: int
    result: bool
    c1: int
    c2: int


class MinimalityViolation(NamedTuple):
    low: int
    high: int
    collect_derefs: int
    result_len: int


@dataclass
class ValidationReport:
    rq_checked: int = 0
    contains_checked: int = 0
    rq_violations: list[RqViolation] = field(default_factory=list)
    contains_violations: list[ContainsViolation] = field(default_factory=list)
    minimality_violations: list[MinimalityViolation] = field(default_factory=list)

    @property
    def total_violations(self) -> int:
        return len(self.rq_violations) + len(self.contains_violations)

    @property
    def ok(self) -> bool:
        return self.total_violations == 0

    def summary(self) -> str:
        return (f"checked {self.rq_checked} range queries and "
                f"{self.contains_checked} membership probes: "
                f"{len(self.rq_violations)} range violations, "
                f"{len(self.contains_violations)} window violations, "
                f"{len(self.minimality_violations)} minimality violations")


# -- prefill --------------------------------------------------------------------


def prefill(structure, cfg: WorkloadConfig) -> list[OpLogEntry]:
    """Insert a uniformly chosen half of the key range (exact, without
    replacement), logging each insert's timestamp for the oracle."""
    rng = random.Random(f"{cfg.seed}:prefill")
    keys = rng.sample(range(cfg.key_range), cfg.key_range // 2)
    if cfg.structure == "list":
        # descending insertion keeps every insert O(1) deep; the logged
        # timestamps carry the order, so the oracle is unaffected
        keys.sort(reverse=True)
    log: list[OpLogEntry] = []
    for key in keys:
        ok, ts = structure.insert_with_ts(key, key)
        assert ok and ts is not None
        log.append(OpLogEntry("insert", key, ts))
    return log


# -- run -------------------------------------------------------------------------


@dataclass
class RunStats:
    ds: str
    workload: str
    threads: int
    rq_size: int
    key_range: int
    trial: int
    duration_s: float
    total_ops: int
    updates: int
    contains: int
    rqs: int
    throughput_mops: float
    violations: int  # -1 when the run was not validated

    def csv_row(self) -> list:
        return [self.ds, self.workload, self.threads, self.rq_size,
                self.key_range, self.trial, round(self.duration_s, 4),
                self.total_ops, self.updates, self.contains, self.rqs,
                round(self.throughput_mops, 6), self.violations]


CSV_COLUMNS = ["ds", "workload", "threads", "rq_size", "key_range", "trial",
               "duration_s", "total_ops", "updates", "contains", "rqs",
               "throughput_mops", "violations"]


@dataclass
class RunResult:
    stats: RunStats
    report: Optional[ValidationReport]
    threshold_log: list[int]
    audit: dict[str, int]
    op_log: list[OpLogEntry]
    rq_log: list[RqLogEntry]
    contains_log: list[ContainsLogEntry]


class _WorkerOut:
    __slots__ = ("updates", "contains", "rqs", "op_log", "rq_log",
                 "contains_log", "error")

    def __init__(self) -> None:
        self.updates = 0
        self.contains = 0
        self.rqs = 0
        self.op_log: list[OpLogEntry] = []
        self.rq_log: list[RqLogEntry] = []
        self.contains_log: list[ContainsLogEntry] = []
        self.error: Optional[BaseException] = None


def _thread_roles(cfg: WorkloadConfig) -> list[Optional[str]]:
    """Per-thread fixed roles for dedicated mode, else free per-op draws."""
    if not cfg.dedicated:
        return [None] * cfg.threads
    upd = round(cfg.threads * cfg.mix[0] / 100)
    con = round(cfg.threads * cfg.mix[1] / 100)
    upd = min(upd, cfg.threads)
    con = min(con, cfg.threads - upd)
    roles = ["update"] * upd + ["contains"] * con
    roles += ["rq"] * (cfg.threads - len(roles))
    return roles


def _worker(structure, cfg: WorkloadConfig, tid: int, role: Optional[str],
            barrier: threading.Barrier, stop: threading.Event,
            out: _WorkerOut) -> None:
    rng = random.Random(f"{cfg.seed}:{tid}")
    clock = structure.clock
    upd_pct, con_pct, _ = cfg.mix
    validate = cfg.validate
    budget = cfg.ops_per_thread
    try:
        barrier.wait()
        done = 0
        while True:
            if budget is not None:
                if done >= budget:
                    break
            elif stop.is_set():
                break
            done += 1
            if role is None:
                r = rng.random() * 100.0
                kind = ("update" if r < upd_pct
                        else "contains" if r < upd_pct + con_pct else "rq")
            else:
                kind = role
            if kind == "update":
                key = rng.randrange(cfg.key_range)
                if rng.random() < 0.5:
                    ok, ts = structure.insert_with_ts(key, key)
                    if ok and validate:
                        out.op_log.append(OpLogEntry("insert", key, ts))
                else:
                    ok, ts = structure.remove_with_ts(key)
                    if ok and validate:
                        out.op_log.append(OpLogEntry("remove", key, ts))
                out.updates += 1
            elif kind == "contains":
                key = rng.randrange(cfg.key_range)
                c1 = clock.read()
                result = structure.contains(key)
                c2 = clock.read()
                if validate:
                    out.contains_log.append(ContainsLogEntry(key, result, c1, c2))
                out.contains += 1
            else:
                low = rng.randrange(cfg.key_range - cfg.rq_size + 1)
                high = low + cfg.rq_size - 1
                if cfg.unsafe_rq:
                    pairs, ts = structure.range_query_unsafe(low, high)
                    if validate:
                        keys = tuple(k for k, _ in pairs)
                        out.rq_log.append(RqLogEntry(low, high, ts, keys, None))
                else:
                    res = structure.range_query_ext(low, high)
                    if validate:
                        out.rq_log.append(RqLogEntry(
                            low, high, res.ts, res.keys, res.collect_derefs))
                out.rqs += 1
    except BaseException as exc:  # surfaced by run() after the joins
        out.error = exc
        stop.set()


def run(cfg: WorkloadConfig, trial: int = 0) -> RunResult:
    """Prefill, spawn workers (plus the cleanup thread), measure, validate.

    Always drains the reclamation limbo at shutdown and checks that the
    allocation audit balances and the retirement threshold log is
    monotone; a validated run additionally replays the oracle.
    """
    structure = make_structure(cfg)
    prefill_log = prefill(structure, cfg)

    cleaner = None
    if cfg.cleanup:
        cleaner = CleanupWorker(structure, cfg.cleanup_interval_ms / 1000.0)

    barrier = threading.Barrier(cfg.threads + 1)
    stop = threading.Event()
    roles = _thread_roles(cfg)
    outs = [_WorkerOut() for _ in range(cfg.threads)]
    threads = [threading.Thread(
        target=_worker,
        args=(structure, cfg, tid, roles[tid], barrier, stop, outs[tid]),
        name=f"worker-{tid}", daemon=True) for tid in range(cfg.threads)]

    old_interval = sys.getswitchinterval()
    sys.setswitchinterval(0.001)  # finer interleaving at desk scale
    try:
        if cleaner is not None:
            cleaner.start()
        for t in threads:
            t.start()
        barrier.wait()
        start = time.perf_counter()
        if cfg.ops_per_thread is None:
            time.sleep(cfg.duration_s)
            stop.set()
        for t in threads:
            t.join()
        elapsed = time.perf_counter() - start
    finally:
        stop.set()
        if cleaner is not None:
            cleaner.stop()
        sys.setswitchinterval(old_interval)

    for out in outs:
        if out.error is not None:
            raise out.error

    threshold_log = list(structure.epochs.threshold_log)
    assert threshold_log == sorted(threshold_log), \
        "retirement threshold regressed"
    structure.epochs.drain()
    audit = structure.epochs.audit_counts()
    live = structure.live_counts()
    assert audit["limbo"] == 0
    assert audit["nodes_allocated"] == audit["nodes_freed"] + live["nodes"], \
        "node allocation audit out of balance"
    assert audit["entries_allocated"] == audit["entries_freed"] + live["entries"], \
        "entry allocation audit out of balance"

    updates = sum(o.updates for o in outs)
    contains = sum(o.contains for o in outs)
    rqs = sum(o.rqs for o in outs)
    total = updates + contains + rqs
    op_log = prefill_log + [e for o in outs for e in o.op_log]
    rq_log = [e for o in outs for e in o.rq_log]
    contains_log = [e for o in outs for e in o.contains_log]

    report = None
    if cfg.validate:
        report = oracle_validate(op_log, rq_log, contains_log, cfg.key_range,
                                 check_minimality=cfg.structure == "list"
                                 and not cfg.unsafe_rq)

    stats = RunStats(
        ds=cfg.structure, workload=cfg.workload_label, threads=cfg.threads,
        rq_size=cfg.rq_size, key_range=cfg.key_range, trial=trial,
        duration_s=elapsed, total_ops=total, updates=updates,
        contains=contains, rqs=rqs,
        throughput_mops=total / elapsed / 1e6,
        violations=report.total_violations if report is not None else -1)
    return RunResult(stats, report, threshold_log, audit,
                     op_log, rq_log, contains_log)


# -- the replay oracle -------------------------------------------------------------


def oracle_validate(op_log: list[OpLogEntry], rq_log: list[RqLogEntry],
                    contains_log: list[ContainsLogEntry], key_range: int,
                    check_minimality: bool = False) -> ValidationReport:
    """Replay the total update order and check every read against it.

    Range queries: the replayed state at the snapshot timestamp restricted
    to [low, high] must equal the returned key set exactly. Membership
    probes: some instant within [c1, c2] must agree with the result.
    """
    updates = sorted(op_log, key=lambda e: e.ts)
    for a, b in zip(updates, updates[1:]):
        if a.ts == b.ts:
            raise ValueError(f"duplicate linearization timestamp {a.ts}")

    report = ValidationReport()

    # sweep range queries in snapshot order against a replayed key set
    present = bytearray(key_range)
    idx = 0
    for rq in sorted(rq_log, key=lambda e: e.ts):
        while idx < len(updates) and updates[idx].ts <= rq.ts:
            entry = updates[idx]
            present[entry.key] = 1 if entry.kind == "insert" else 0
            idx += 1
        expected = tuple(k for k in range(rq.low, min(rq.high, key_range - 1) + 1)
                         if present[k])
        report.rq_checked += 1
        if expected != rq.keys:
            report.rq_violations.append(
                RqViolation(rq.low, rq.high, rq.ts, expected, rq.keys))
        if (check_minimality and rq.collect_derefs is not None
                and rq.collect_derefs != len(rq.keys) + 1):
            report.minimality_violations.append(MinimalityViolation(
                rq.low, rq.high, rq.collect_derefs, len(rq.keys)))

    # per-key event lists for the membership windows
    by_key: dict[int, tuple[list[int], list[bool]]] = {}
    for entry in updates:
        ts_list, ins_list = by_key.setdefault(entry.key, ([], []))
        ts_list.append(entry.ts)
        ins_list.append(entry.kind == "insert")

    for probe in contains_log:
        report.contains_checked += 1
        ts_list, ins_list = by_key.get(probe.key, ([], []))
        i = bisect_right(ts_list, probe.c1)
        state = ins_list[i - 1] if i else False
        ok = state == probe.result
        while not ok and i < len(ts_list) and ts_list[i] <= probe.c2:
            ok = ins_list[i] == probe.result
            i += 1
        if not ok:
            report.contains_violations.append(ContainsViolation(*probe))
    return report


# -- CSV ---------------------------------------------------------------------------


def emit_csv(stats: RunStats, path: str) -> None:
    """Append one row per (config, trial); writes the header on creation."""
    new_file = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh)
        if new_file:
            writer.writerow(CSV_COLUMNS)
        writer.writerow(stats.csv_row())
