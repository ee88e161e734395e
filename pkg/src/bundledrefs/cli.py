"""Command-line front end: bench, validate, selftest, and sweep."""

from __future__ import annotations

import argparse
import sys
from typing import Optional

from .bst import BundledTree
from .core import KEY_MAX, KEY_MIN
from .harness import (
    DEFAULT_KEY_RANGE,
    RunResult,
    STRUCTURES,
    WorkloadConfig,
    emit_csv,
    parse_mix,
    run,
)
from .linkedlist import BundledLinkedList
from .skiplist import BundledSkipList

#: the workload grid a bare sweep walks (desk-scale defaults)
SWEEP_MIXES = ["2-88-10", "10-80-10", "50-40-10", "90-0-10", "0-90-10", "100-0-0"]
SWEEP_THREADS = [1, 2, 4, 8]

GOLDEN_SNAPSHOTS = {0: [], 1: [20], 2: [20, 30], 3: [10, 20, 30], 4: [10, 30]}


def _mix_arg(text: str) -> tuple[int, int, int]:
    try:
        return parse_mix(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _csv_list(conv):
    def parse(text: str):
        try:
            return [conv(part) for part in text.split(",") if part]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc))
    return parse


def _add_workload_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--ds", choices=STRUCTURES, default="list")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--duration-s", type=float, default=3.0)
    parser.add_argument("--mix", type=_mix_arg, default=(10, 80, 10),
                        metavar="U-C-RQ")
    parser.add_argument("--rq-size", type=int, default=50)
    parser.add_argument("--key-range", type=int, default=None,
                        help="defaults: list 10000, skiplist/bst 1000000")
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--rq-advance", action="store_true",
                        help="range queries advance the clock instead of reading it")
    parser.add_argument("--unsafe-rq", action="store_true",
                        help="uninstrumented, non-linearizable range queries")
    parser.add_argument("--cleanup-interval-ms", type=float, default=10.0)
    parser.add_argument("--no-cleanup", action="store_true")
    parser.add_argument("--dedicated", action="store_true",
                        help="fixed per-thread roles instead of per-op draws")


def _config_from(args, *, validate: bool, ds: Optional[str] = None,
                 threads: Optional[int] = None, mix=None,
                 rq_size: Optional[int] = None) -> WorkloadConfig:
    structure = ds or args.ds
    key_range = args.key_range or DEFAULT_KEY_RANGE[structure]
    try:
        return WorkloadConfig(
            structure=structure,
            threads=threads if threads is not None else args.threads,
            duration_s=args.duration_s,
            mix=tuple(mix) if mix is not None else tuple(args.mix),
            key_range=key_range,
            rq_size=rq_size if rq_size is not None else args.rq_size,
            seed=args.seed,
            rq_advance=args.rq_advance,
            validate=validate,
            unsafe_rq=args.unsafe_rq,
            cleanup=not args.no_cleanup,
            cleanup_interval_ms=args.cleanup_interval_ms,
            dedicated=args.dedicated,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(2) from exc


def _print_result(result: RunResult) -> None:
    s = result.stats
    line = (f"{s.ds} {s.workload} threads={s.threads} rq={s.rq_size} "
            f"keys={s.key_range} trial={s.trial}: {s.total_ops} ops in "
            f"{s.duration_s:.2f}s -> {s.throughput_mops:.4f} Mops/s "
            f"(upd={s.updates} con={s.contains} rq={s.rqs})")
    if result.report is not None:
        line += f" violations={result.report.total_violations}"
    print(line, flush=True)


def cmd_bench(args) -> int:
    violations = 0
    for trial in range(args.trials):
        cfg = _config_from(args, validate=args.validate)
        result = run(cfg, trial)
        _print_result(result)
        if result.report is not None:
            violations += result.report.total_violations
            if not result.report.ok:
                print(result.report.summary(), flush=True)
        if args.csv:
            emit_csv(result.stats, args.csv)
    return 1 if violations else 0


def cmd_validate(args) -> int:
    violations = 0
    for trial in range(args.trials):
        cfg = _config_from(args, validate=True)
        result = run(cfg, trial)
        _print_result(result)
        assert result.report is not None
        print(result.report.summary(), flush=True)
        violations += result.report.total_violations
        for v in result.report.rq_violations[:10]:
            print(f"  RQ [{v.low},{v.high}] ts={v.ts}: expected {v.expected}, "
                  f"got {v.actual}", flush=True)
        for c in result.report.contains_violations[:10]:
            print(f"  contains({c.key})={c.result} has no witness in "
                  f"[{c.c1},{c.c2}]", flush=True)
        if args.csv:
            emit_csv(result.stats, args.csv)
    return 1 if violations else 0


def _selftest_list() -> list[str]:
    lst = BundledLinkedList()
    assert lst.insert(20, 20)
    assert lst.insert(30, 30)
    node20 = lst.head.next
    assert lst.insert(10, 10)
    assert lst.remove(20)

    def label(node):
        return {KEY_MIN: "head", KEY_MAX: "tail"}.get(node.key, node.key)

    def table(node):
        return ", ".join(f"({e.ts} -> {label(e.target)})"
                         for e in node.bundle.entries())

    lines = ["bundle table after insert(20), insert(30), insert(10), remove(20):"]
    for name, node in [("head", lst.head), ("10", lst.head.next),
                       ("20", node20), ("30", lst.head.next.next)]:
        lines.append(f"  {name:>4}: {table(node)}")

    expected = {
        "head": [(3, 10), (1, 20), (0, "tail")],
        "10": [(4, 30), (3, 20)],
        "20": [(4, "head"), (2, 30), (1, "tail")],
        "30": [(2, "tail")],
    }
    actual = {
        "head": [(e.ts, label(e.target)) for e in lst.head.bundle.entries()],
        "10": [(e.ts, label(e.target)) for e in lst.head.next.bundle.entries()],
        "20": [(e.ts, label(e.target)) for e in node20.bundle.entries()],
        "30": [(e.ts, label(e.target))
               for e in lst.head.next.next.bundle.entries()],
    }
    if actual != expected:
        raise AssertionError(f"list bundle table mismatch: {actual}")
    _check_snapshots(lst)
    return lines


def _check_snapshots(structure) -> None:
    for ts, expected in GOLDEN_SNAPSHOTS.items():
        got = [k for k, _ in structure.snapshot_range(1, 100, ts)]
        if got != expected:
            raise AssertionError(
                f"{structure.name}: snapshot at ts={ts} is {got}, "
                f"expected {expected}")


def cmd_selftest(args) -> int:
    lines = _selftest_list()
    for structure in (BundledSkipList(seed=1), BundledTree()):
        for key in (20, 30, 10):
            assert structure.insert(key, key)
        assert structure.remove(20)
        _check_snapshots(structure)
    for line in lines:
        print(line)
    print("selftest ok: replayed snapshots match on list, skiplist, bst",
          flush=True)
    return 0


def cmd_sweep(args) -> int:
    mixes = [parse_mix(m) if isinstance(m, str) else m for m in args.mixes]
    violations = 0
    for ds in args.structures:
        for mix in mixes:
            for threads in args.threads_list:
                for rq_size in args.rq_sizes:
                    for trial in range(args.trials):
                        cfg = _config_from(args, validate=args.validate, ds=ds,
                                           threads=threads, mix=mix,
                                           rq_size=rq_size)
                        result = run(cfg, trial)
                        _print_result(result)
                        if result.report is not None:
                            violations += result.report.total_violations
                        if args.csv:
                            emit_csv(result.stats, args.csv)
    return 1 if violations else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bundledrefs",
        description="benchmark and validate bundled-reference ordered maps")
    sub = parser.add_subparsers(dest="command", required=True)

    bench = sub.add_parser("bench", help="run a workload and log throughput")
    _add_workload_args(bench)
    bench.add_argument("--trials", type=int, default=1)
    bench.add_argument("--csv", default=None)
    bench.add_argument("--validate", action="store_true")
    bench.set_defaults(func=cmd_bench)

    validate = sub.add_parser("validate",
                              help="run with the replay oracle; exit 1 on violations")
    _add_workload_args(validate)
    validate.add_argument("--trials", type=int, default=1)
    validate.add_argument("--csv", default=None)
    validate.set_defaults(func=cmd_validate)

    selftest = sub.add_parser("selftest",
                              help="replay the scripted four-op history on all structures")
    selftest.set_defaults(func=cmd_selftest)

    sweep = sub.add_parser("sweep", help="cartesian workload grid")
    _add_workload_args(sweep)
    sweep.add_argument("--structures", type=_csv_list(str),
                       default=list(STRUCTURES))
    sweep.add_argument("--mixes", type=_csv_list(parse_mix), default=SWEEP_MIXES)
    sweep.add_argument("--threads-list", type=_csv_list(int),
                       default=SWEEP_THREADS)
    sweep.add_argument("--rq-sizes", type=_csv_list(int), default=[50])
    sweep.add_argument("--trials", type=int, default=1)
    sweep.add_argument("--csv", default="results.csv")
    sweep.add_argument("--validate", action="store_true")
    sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
