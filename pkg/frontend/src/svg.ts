/**
 * Minimal hand-rolled SVG line charts; no DOM, no dependencies.
 */

export interface ChartSeries {
  label: string;
  points: { x: number; y: number }[];
}

export interface ChartOptions {
  title: string;
  xLabel: string;
  yLabel: string;
  logX?: boolean;
  width?: number;
  height?: number;
}

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

const MARGIN = { top: 40, right: 30, bottom: 48, left: 64 };

function niceTicks(min: number, max: number, count = 5): number[] {
  if (min === max) return [min];
  const span = max - min;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const err = (count * step) / span;
  const factor = err <= 0.15 ? 10 : err <= 0.35 ? 5 : err <= 0.75 ? 2 : 1;
  const niceStep = step * factor;
  const ticks: number[] = [];
  for (let t = Math.ceil(min / niceStep) * niceStep; t <= max + 1e-12; t += niceStep) {
    ticks.push(Number(t.toPrecision(12)));
  }
  return ticks;
}

function formatTick(v: number): string {
  if (v === 0) return "0";
  if (Math.abs(v) >= 1000 || Math.abs(v) < 0.001) return v.toExponential(1);
  return String(Number(v.toPrecision(4)));
}

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;");
}

/** Render a line chart as an SVG document string. */
export function lineChart(series: ChartSeries[], opts: ChartOptions): string {
  const width = opts.width ?? 640;
  const height = opts.height ?? 420;
  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;

  const xs = series.flatMap((s) => s.points.map((p) => p.x));
  const ys = series.flatMap((s) => s.points.map((p) => p.y));
  if (xs.length === 0) {
    throw new Error(`no data points for chart "${opts.title}"`);
  }
  const xOf = (x: number) => (opts.logX ? Math.log10(x) : x);
  const xMin = Math.min(...xs.map(xOf));
  const xMax = Math.max(...xs.map(xOf));
  const yMin = 0;
  const yMax = Math.max(...ys) || 1;

  const sx = (x: number) =>
    MARGIN.left + (xMax === xMin ? plotW / 2
      : ((xOf(x) - xMin) / (xMax - xMin)) * plotW);
  const sy = (y: number) =>
    MARGIN.top + plotH - ((y - yMin) / (yMax - yMin)) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}" font-family="sans-serif" font-size="12">`,
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  parts.push(
    `<text x="${width / 2}" y="20" text-anchor="middle" font-size="14" ` +
    `font-weight="bold">${escapeXml(opts.title)}</text>`,
  );

  // axes
  const x0 = MARGIN.left;
  const y0 = MARGIN.top + plotH;
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x0 + plotW}" y2="${y0}" stroke="black"/>`);
  parts.push(`<line x1="${x0}" y1="${MARGIN.top}" x2="${x0}" y2="${y0}" stroke="black"/>`);

  const xTickVals = opts.logX
    ? [...new Set(xs)].sort((a, b) => a - b)
    : niceTicks(Math.min(...xs), Math.max(...xs));
  for (const t of xTickVals) {
    const px = sx(t);
    parts.push(`<line x1="${px}" y1="${y0}" x2="${px}" y2="${y0 + 4}" stroke="black"/>`);
    parts.push(
      `<text x="${px}" y="${y0 + 18}" text-anchor="middle">${formatTick(t)}</text>`,
    );
  }
  for (const t of niceTicks(yMin, yMax)) {
    const py = sy(t);
    parts.push(`<line x1="${x0 - 4}" y1="${py}" x2="${x0}" y2="${py}" stroke="black"/>`);
    parts.push(
      `<line x1="${x0}" y1="${py}" x2="${x0 + plotW}" y2="${py}" ` +
      `stroke="#dddddd" stroke-width="0.5"/>`,
    );
    parts.push(
      `<text x="${x0 - 8}" y="${py + 4}" text-anchor="end">${formatTick(t)}</text>`,
    );
  }
  parts.push(
    `<text x="${MARGIN.left + plotW / 2}" y="${height - 10}" ` +
    `text-anchor="middle">${escapeXml(opts.xLabel)}</text>`,
  );
  parts.push(
    `<text x="16" y="${MARGIN.top + plotH / 2}" text-anchor="middle" ` +
    `transform="rotate(-90 16 ${MARGIN.top + plotH / 2})">` +
    `${escapeXml(opts.yLabel)}</text>`,
  );

  // series
  series.forEach((s, i) => {
    const color = COLORS[i % COLORS.length];
    const coords = s.points.map((p) => `${sx(p.x)},${sy(p.y)}`).join(" ");
    parts.push(
      `<polyline points="${coords}" fill="none" stroke="${color}" stroke-width="2"/>`,
    );
    for (const p of s.points) {
      parts.push(`<circle cx="${sx(p.x)}" cy="${sy(p.y)}" r="3" fill="${color}"/>`);
    }
    const ly = MARGIN.top + 8 + i * 16;
    parts.push(
      `<line x1="${x0 + plotW - 120}" y1="${ly}" x2="${x0 + plotW - 100}" ` +
      `y2="${ly}" stroke="${color}" stroke-width="2"/>`,
    );
    parts.push(
      `<text x="${x0 + plotW - 94}" y="${ly + 4}">${escapeXml(s.label)}</text>`,
    );
  });
  parts.push("</svg>");
  return parts.join("\n");
}
