/**
 * Figure generation: one chart per (structure, mix) for throughput versus
 * threads, and one per structure for throughput versus range-query size.
 * Each figure's data series is also dumped as JSON next to it, which is
 * what the golden tests compare.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { parseResultsCsv, ResultRow } from "./csv.js";
import { rqSizeSeries, workloadSeries } from "./series.js";
import { lineChart } from "./svg.js";

export type Which = "workloads" | "rqsizes" | "all";

export interface WrittenFigure {
  svg: string;
  json: string;
}

function writeFigure(
  outDir: string,
  stem: string,
  svgText: string,
  data: unknown,
): WrittenFigure {
  const svgPath = path.join(outDir, `${stem}.svg`);
  const jsonPath = path.join(outDir, `${stem}.json`);
  fs.writeFileSync(svgPath, svgText);
  fs.writeFileSync(jsonPath, JSON.stringify(data, null, 2) + "\n");
  return { svg: svgPath, json: jsonPath };
}

export function plotWorkloads(rows: ResultRow[], outDir: string): WrittenFigure[] {
  const written: WrittenFigure[] = [];
  for (const series of workloadSeries(rows)) {
    const stem = `${series.ds}_${series.workload}`;
    const svgText = lineChart(
      [{ label: series.ds, points: series.points }],
      {
        title: `${series.ds} ${series.workload}`,
        xLabel: "threads",
        yLabel: "throughput (Mops/s)",
      },
    );
    written.push(writeFigure(outDir, stem, svgText, series));
  }
  return written;
}

export function plotRqSizes(rows: ResultRow[], outDir: string): WrittenFigure[] {
  const written: WrittenFigure[] = [];
  for (const series of rqSizeSeries(rows)) {
    const stem = `${series.ds}_rqsizes`;
    const svgText = lineChart(
      [
        { label: "updates", points: series.updateThroughput },
        { label: "range queries", points: series.rqThroughput },
      ],
      {
        title: `${series.ds}: throughput vs range-query size`,
        xLabel: "range-query size (log scale)",
        yLabel: "throughput (Mops/s)",
        logX: true,
      },
    );
    written.push(writeFigure(outDir, stem, svgText, series));
  }
  return written;
}

export function plotCsvFile(
  csvPath: string,
  outDir: string,
  which: Which,
): WrittenFigure[] {
  const rows = parseResultsCsv(fs.readFileSync(csvPath, "utf8"));
  fs.mkdirSync(outDir, { recursive: true });
  const written: WrittenFigure[] = [];
  if (which === "workloads" || which === "all") {
    written.push(...plotWorkloads(rows, outDir));
  }
  if (which === "rqsizes" || which === "all") {
    written.push(...plotRqSizes(rows, outDir));
  }
  return written;
}
