/**
 * Usage: plot <results.csv> --out <dir> [--which workloads|rqsizes|all]
 */

import { pathToFileURL } from "node:url";

import { SchemaError } from "./csv.js";
import { plotCsvFile, Which } from "./plot.js";

export function main(argv: string[]): number {
  let csvPath: string | undefined;
  let outDir = "figures";
  let which: Which = "all";

  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === "--out") {
      outDir = argv[++i];
    } else if (arg === "--which") {
      const value = argv[++i];
      if (value !== "workloads" && value !== "rqsizes" && value !== "all") {
        console.error(`error: --which must be workloads|rqsizes|all, got ${value}`);
        return 2;
      }
      which = value;
    } else if (arg === "--help" || arg === "-h") {
      console.log("usage: plot <results.csv> --out <dir> [--which workloads|rqsizes|all]");
      return 0;
    } else if (arg.startsWith("--")) {
      console.error(`error: unknown flag ${arg}`);
      return 2;
    } else if (csvPath === undefined) {
      csvPath = arg;
    } else {
      console.error(`error: unexpected argument ${arg}`);
      return 2;
    }
  }
  if (!csvPath) {
    console.error("error: missing CSV path");
    return 2;
  }
  try {
    const written = plotCsvFile(csvPath, outDir, which);
    for (const fig of written) {
      console.log(`wrote ${fig.svg} and ${fig.json}`);
    }
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`schema error: ${err.message}`);
      return 1;
    }
    throw err;
  }
}

const entry = process.argv[1];
if (entry && import.meta.url === pathToFileURL(entry).href) {
  process.exit(main(process.argv.slice(2)));
}
