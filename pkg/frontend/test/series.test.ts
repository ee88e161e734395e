import { describe, expect, it } from "vitest";

import { ResultRow } from "../src/csv.js";
import { rqSizeSeries, workloadSeries } from "../src/series.js";

function row(partial: Partial<ResultRow>): ResultRow {
  return {
    ds: "list",
    workload: "10-80-10",
    threads: 1,
    rq_size: 50,
    key_range: 10_000,
    trial: 0,
    duration_s: 2.0,
    total_ops: 1000,
    updates: 100,
    contains: 800,
    rqs: 100,
    throughput_mops: 0.001,
    violations: 0,
    ...partial,
  };
}

describe("workloadSeries", () => {
  it("averages trials per thread count", () => {
    const rows = [
      row({ threads: 1, trial: 0, throughput_mops: 0.2 }),
      row({ threads: 1, trial: 1, throughput_mops: 0.4 }),
      row({ threads: 4, trial: 0, throughput_mops: 1.0 }),
    ];
    const series = workloadSeries(rows);
    expect(series).toHaveLength(1);
    expect(series[0].points).toEqual([
      { x: 1, y: 0.30000000000000004 },
      { x: 4, y: 1.0 },
    ]);
  });

  it("splits by structure and mix", () => {
    const rows = [
      row({ ds: "bst" }),
      row({ ds: "list" }),
      row({ ds: "list", workload: "90-0-10" }),
    ];
    const series = workloadSeries(rows);
    expect(series.map((s) => `${s.ds}/${s.workload}`)).toEqual([
      "bst/10-80-10",
      "list/10-80-10",
      "list/90-0-10",
    ]);
  });

  it("sorts points by thread count", () => {
    const rows = [row({ threads: 8 }), row({ threads: 2 })];
    expect(workloadSeries(rows)[0].points.map((p) => p.x)).toEqual([2, 8]);
  });
});

describe("rqSizeSeries", () => {
  it("derives per-kind throughput from counts and duration", () => {
    const rows = [
      row({ rq_size: 10, updates: 2_000_000, rqs: 1_000_000, duration_s: 2.0 }),
      row({ rq_size: 100, updates: 500_000, rqs: 250_000, duration_s: 1.0 }),
    ];
    const [series] = rqSizeSeries(rows);
    expect(series.updateThroughput).toEqual([
      { x: 10, y: 1.0 },
      { x: 100, y: 0.5 },
    ]);
    expect(series.rqThroughput).toEqual([
      { x: 10, y: 0.5 },
      { x: 100, y: 0.25 },
    ]);
  });

  it("keeps structures separate", () => {
    const rows = [row({ ds: "bst" }), row({ ds: "skiplist" })];
    expect(rqSizeSeries(rows).map((s) => s.ds)).toEqual(["bst", "skiplist"]);
  });
});
