#!/usr/bin/env python3
"""Desk-scale benchmark campaign.

Runs the workload grid (mix x threads, fixed range size) and the
range-query-size experiment (dedicated update/query threads), appending
rows to results/workloads.csv and results/rq_sizes.csv. Plot afterwards:

    cd frontend && npm run plot -- ../results/workloads.csv --out ../figures --which workloads
    cd frontend && npm run plot -- ../results/rq_sizes.csv --out ../figures --which rqsizes
"""

import argparse
import os
import sys

from bundledrefs.cli import main as cli_main


def run(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="results")
    parser.add_argument("--duration-s", type=float, default=3.0)
    parser.add_argument("--trials", type=int, default=3)
    parser.add_argument("--threads-list", default="1,2,4,8")
    parser.add_argument("--structures", default="list,skiplist,bst")
    parser.add_argument("--key-range", type=int, default=None,
                        help="override the per-structure defaults")
    args = parser.parse_args(argv)

    os.makedirs(args.out_dir, exist_ok=True)
    common = ["--duration-s", str(args.duration_s),
              "--trials", str(args.trials)]
    if args.key_range:
        common += ["--key-range", str(args.key_range)]

    rc = cli_main([
        "sweep", "--structures", args.structures,
        "--threads-list", args.threads_list,
        "--mixes", "2-88-10,10-80-10,50-40-10,90-0-10,0-90-10,100-0-0",
        "--rq-sizes", "50",
        "--csv", os.path.join(args.out_dir, "workloads.csv"),
        *common,
    ])
    if rc != 0:
        return rc

    return cli_main([
        "sweep", "--structures", args.structures,
        "--threads-list", "8",
        "--mixes", "50-0-50", "--dedicated",
        "--rq-sizes", "1,10,50,100,250",
        "--csv", os.path.join(args.out_dir, "rq_sizes.csv"),
        *common,
    ])


if __name__ == "__main__":
    sys.exit(run())
