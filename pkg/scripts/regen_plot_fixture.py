#!/usr/bin/env python3
"""Regenerate the frontend plot fixture and its golden data series.

The golden JSON is a pure function of the committed CSV, so this only
needs rerunning when the CSV schema or the series math changes. After
regenerating, rebuild and copy the fresh JSON over the goldens:

    python scripts/regen_plot_fixture.py
    cd frontend && npm run build && node dist/cli.js fixtures/sample.csv --out /tmp/fig
    cp /tmp/fig/*.json frontend/golden/
"""

import os
import sys

from bundledrefs.harness import WorkloadConfig, emit_csv, run

PATH = os.path.join(os.path.dirname(__file__), "..",
                    "frontend", "fixtures", "sample.csv")


def main():
    if os.path.exists(PATH):
        os.remove(PATH)
    for ds in ("skiplist", "bst"):
        for mix in ((10, 80, 10), (90, 0, 10)):
            for threads in (1, 2, 4):
                for trial in range(2):
                    cfg = WorkloadConfig(structure=ds, threads=threads,
                                         duration_s=0.15, mix=mix,
                                         key_range=2_000, rq_size=25,
                                         seed=trial + threads)
                    emit_csv(run(cfg, trial).stats, PATH)
    for ds in ("skiplist", "bst"):
        for rq_size in (1, 10, 50, 100, 250):
            for trial in range(2):
                cfg = WorkloadConfig(structure=ds, threads=4,
                                     duration_s=0.15, mix=(50, 0, 50),
                                     key_range=2_000, rq_size=rq_size,
                                     seed=trial, dedicated=True)
                emit_csv(run(cfg, trial).stats, PATH)
    print(f"wrote {PATH}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
