/**
 * Parsing and validation of benchmark result CSVs.
 *
 * The expected schema is the one the harness emits; any missing or extra
 * column is a hard error so plots never silently misread a file.
 */

export const EXPECTED_COLUMNS = [
  "ds",
  "workload",
  "threads",
  "rq_size",
  "key_range",
  "trial",
  "duration_s",
  "total_ops",
  "updates",
  "contains",
  "rqs",
  "throughput_mops",
  "violations",
] as const;

export interface ResultRow {
  ds: string;
  workload: string;
  threads: number;
  rq_size: number;
  key_range: number;
  trial: number;
  duration_s: number;
  total_ops: number;
  updates: number;
  contains: number;
  rqs: number;
  throughput_mops: number;
  violations: number;
}

export class SchemaError extends Error {}

const NUMERIC_COLUMNS: (keyof ResultRow)[] = [
  "threads",
  "rq_size",
  "key_range",
  "trial",
  "duration_s",
  "total_ops",
  "updates",
  "contains",
  "rqs",
  "throughput_mops",
  "violations",
];

/** Parse harness CSV text into typed rows, validating the header exactly. */
export function parseResultsCsv(text: string): ResultRow[] {
  const lines = text
    .split(/\r?\n/)
    .map((l) => l.trim())
    .filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty CSV: nothing to plot");
  }
  const header = lines[0].split(",");
  const expected = EXPECTED_COLUMNS as readonly string[];
  if (header.length !== expected.length ||
      expected.some((name, i) => header[i] !== name)) {
    throw new SchemaError(
      `bad header: expected "${expected.join(",")}", got "${lines[0]}"`,
    );
  }
  const rows: ResultRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== expected.length) {
      throw new SchemaError(
        `row ${i + 1}: expected ${expected.length} fields, got ${parts.length}`,
      );
    }
    const row: Record<string, string | number> = {};
    expected.forEach((name, j) => {
      row[name] = parts[j];
    });
    for (const name of NUMERIC_COLUMNS) {
      const value = Number(row[name]);
      if (!Number.isFinite(value)) {
        throw new SchemaError(`row ${i + 1}: column ${name} is not numeric`);
      }
      row[name] = value;
    }
    rows.push(row as unknown as ResultRow);
  }
  if (rows.length === 0) {
    throw new SchemaError("CSV has a header but no data rows");
  }
  return rows;
}
