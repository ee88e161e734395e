import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { fileURLToPath } from "node:url";

import { afterAll, describe, expect, it } from "vitest";

import { plotCsvFile } from "../src/plot.js";
import { main } from "../src/cli.js";

const here = path.dirname(fileURLToPath(import.meta.url));
const fixtureCsv = path.join(here, "..", "fixtures", "sample.csv");
const goldenDir = path.join(here, "..", "golden");

const outDir = fs.mkdtempSync(path.join(os.tmpdir(), "bundledrefs-plots-"));

afterAll(() => {
  fs.rmSync(outDir, { recursive: true, force: true });
});

describe("golden round trip", () => {
  it("reproduces every committed data series exactly", () => {
    const written = plotCsvFile(fixtureCsv, outDir, "all");
    expect(written.length).toBeGreaterThan(0);
    const goldenFiles = fs.readdirSync(goldenDir).filter((f) => f.endsWith(".json"));
    expect(goldenFiles.length).toBeGreaterThan(0);
    const producedNames = written.map((w) => path.basename(w.json)).sort();
    expect(producedNames).toEqual(goldenFiles.sort());
    for (const name of goldenFiles) {
      const produced = fs.readFileSync(path.join(outDir, name), "utf8");
      const golden = fs.readFileSync(path.join(goldenDir, name), "utf8");
      expect(produced, `data series drifted for ${name}`).toBe(golden);
    }
  });

  it("writes an svg beside every json", () => {
    const written = plotCsvFile(fixtureCsv, outDir, "all");
    for (const fig of written) {
      const svg = fs.readFileSync(fig.svg, "utf8");
      expect(svg.startsWith("<svg")).toBe(true);
      expect(svg).toContain("polyline");
    }
  });

  it("never mutates the input csv", () => {
    const before = fs.readFileSync(fixtureCsv, "utf8");
    plotCsvFile(fixtureCsv, outDir, "all");
    expect(fs.readFileSync(fixtureCsv, "utf8")).toBe(before);
  });
});

describe("cli", () => {
  it("plots the fixture and exits 0", () => {
    expect(main([fixtureCsv, "--out", outDir, "--which", "workloads"])).toBe(0);
  });

  it("exits nonzero with a message on a schema error", () => {
    const bad = path.join(outDir, "bad.csv");
    fs.writeFileSync(bad, "nope,nope\n1,2\n");
    expect(main([bad, "--out", outDir])).toBe(1);
  });

  it("rejects unknown flags", () => {
    expect(main([fixtureCsv, "--wat"])).toBe(2);
  });

  it("rejects a bad --which value", () => {
    expect(main([fixtureCsv, "--which", "pies"])).toBe(2);
  });

  it("requires a csv path", () => {
    expect(main(["--out", outDir])).toBe(2);
  });
});
