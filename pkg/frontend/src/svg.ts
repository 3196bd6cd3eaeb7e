/** Deterministic SVG line/scatter charts with linear or log axes.
 *
 * No DOM, no plotting library: coordinates are formatted with fixed
 * precision so identical inputs yield byte-identical files.  Guide lines
 * carry their source value in a `data-value` attribute at full precision so
 * structural tests can compare them exactly against derived formulas.
 */

export type Scale = "linear" | "log";

export interface Series {
  label: string;
  x: number[];
  y: number[];
  color: string;
  dash?: string;
  width?: number;
  markers?: boolean;
}

export interface GuideLine {
  /** horizontal line at y = value, or a curve y = coeff / x */
  kind: "hline" | "inverse-curve";
  value: number;
  label: string;
  color?: string;
}

export interface ChartSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  xScale: Scale;
  yScale: Scale;
  series: Series[];
  guides: GuideLine[];
  width?: number;
  height?: number;
}

const MARGIN = { left: 64, right: 16, top: 28, bottom: 44 };
const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
  "#8c564b", "#17becf", "#e377c2", "#7f7f7f", "#bcbd22"];

export function seriesColor(i: number): string {
  return PALETTE[i % PALETTE.length];
}

function fmt(v: number): string {
  return v.toFixed(2);
}

function fmtTick(v: number, scale: Scale): string {
  if (scale === "log") {
    const e = Math.log10(v);
    if (Math.abs(e - Math.round(e)) < 1e-9) return `1e${Math.round(e)}`;
    return v.toExponential(1);
  }
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1000 || a < 0.01) return v.toExponential(1);
  return String(parseFloat(v.toPrecision(4)));
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

interface Axis {
  lo: number;
  hi: number;
  scale: Scale;
  toPx: (v: number) => number;
  ticks: number[];
}

function finiteValues(vals: number[], scale: Scale): number[] {
  return vals.filter((v) => Number.isFinite(v) && (scale !== "log" || v > 0));
}

function makeAxis(values: number[], scale: Scale, pxLo: number,
  pxHi: number): Axis {
  const usable = values.filter((v) =>
    Number.isFinite(v) && (scale !== "log" || v > 0));
  let lo = Math.min(...usable);
  let hi = Math.max(...usable);
  if (usable.length === 0 || !Number.isFinite(lo) || !Number.isFinite(hi)) {
    lo = scale === "log" ? 0.1 : 0;
    hi = scale === "log" ? 10 : 1;
  }
  if (lo === hi) {
    lo = scale === "log" ? lo / 2 : lo - 1;
    hi = scale === "log" ? hi * 2 : hi + 1;
  }
  if (scale === "log") {
    const llo = Math.log10(lo);
    const lhi = Math.log10(hi);
    const pad = 0.04 * (lhi - llo);
    const a = llo - pad;
    const b = lhi + pad;
    const toPx = (v: number) =>
      pxLo + ((Math.log10(v) - a) / (b - a)) * (pxHi - pxLo);
    const ticks: number[] = [];
    for (let e = Math.ceil(a); e <= Math.floor(b); e++) ticks.push(10 ** e);
    return { lo: 10 ** a, hi: 10 ** b, scale, toPx, ticks };
  }
  const pad = 0.05 * (hi - lo);
  const a = lo - pad;
  const b = hi + pad;
  const toPx = (v: number) => pxLo + ((v - a) / (b - a)) * (pxHi - pxLo);
  const step = niceStep((b - a) / 6);
  const ticks: number[] = [];
  for (let t = Math.ceil(a / step) * step; t <= b + 1e-12; t += step) {
    ticks.push(Math.abs(t) < step * 1e-9 ? 0 : t);
  }
  return { lo: a, hi: b, scale, toPx, ticks };
}

function niceStep(raw: number): number {
  const mag = 10 ** Math.floor(Math.log10(raw));
  const r = raw / mag;
  if (r < 1.5) return mag;
  if (r < 3.5) return 2 * mag;
  if (r < 7.5) return 5 * mag;
  return 10 * mag;
}

/** Render a chart spec to a standalone SVG document. */
export function renderChart(spec: ChartSpec): string {
  const W = spec.width ?? 640;
  const H = spec.height ?? 420;
  const x0 = MARGIN.left;
  const x1 = W - MARGIN.right;
  const y0 = H - MARGIN.bottom;
  const y1 = MARGIN.top;

  const xs = spec.series.flatMap((s) => finiteValues(s.x, spec.xScale));
  const ysData = spec.series.flatMap((s) => finiteValues(s.y, spec.yScale));
  const guideVals = spec.guides.filter((g) => g.kind === "hline")
    .map((g) => g.value)
    .filter((v) => Number.isFinite(v) && (spec.yScale !== "log" || v > 0));
  const ys = ysData.concat(guideVals);
  const hasData = xs.length > 0 && ysData.length > 0;

  const ax = makeAxis(xs.length ? xs : [0, 1], spec.xScale, x0, x1);
  const ay = makeAxis(ys.length ? ys : [0, 1], spec.yScale, y0, y1);

  const parts: string[] = [];
  parts.push(`<svg xmlns="http://www.w3.org/2000/svg" width="${W}" ` +
    `height="${H}" viewBox="0 0 ${W} ${H}" font-family="Helvetica,Arial,sans-serif" ` +
    `data-x-domain="${ax.lo.toPrecision(17)},${ax.hi.toPrecision(17)}" ` +
    `data-y-domain="${ay.lo.toPrecision(17)},${ay.hi.toPrecision(17)}">`);
  parts.push(`<rect width="${W}" height="${H}" fill="white"/>`);
  // frame
  parts.push(`<rect x="${x0}" y="${y1}" width="${x1 - x0}" ` +
    `height="${y0 - y1}" fill="none" stroke="#333" stroke-width="1"/>`);
  // ticks + grid
  for (const t of ax.ticks) {
    const px = ax.toPx(t);
    if (px < x0 - 0.5 || px > x1 + 0.5) continue;
    parts.push(`<line x1="${fmt(px)}" y1="${y0}" x2="${fmt(px)}" ` +
      `y2="${y0 + 5}" stroke="#333"/>`);
    parts.push(`<line x1="${fmt(px)}" y1="${y0}" x2="${fmt(px)}" ` +
      `y2="${y1}" stroke="#eee"/>`);
    parts.push(`<text x="${fmt(px)}" y="${y0 + 18}" font-size="11" ` +
      `text-anchor="middle">${esc(fmtTick(t, spec.xScale))}</text>`);
  }
  for (const t of ay.ticks) {
    const py = ay.toPx(t);
    if (py > y0 + 0.5 || py < y1 - 0.5) continue;
    parts.push(`<line x1="${x0 - 5}" y1="${fmt(py)}" x2="${x0}" ` +
      `y2="${fmt(py)}" stroke="#333"/>`);
    parts.push(`<line x1="${x0}" y1="${fmt(py)}" x2="${x1}" ` +
      `y2="${fmt(py)}" stroke="#eee"/>`);
    parts.push(`<text x="${x0 - 8}" y="${fmt(py + 4)}" font-size="11" ` +
      `text-anchor="end">${esc(fmtTick(t, spec.yScale))}</text>`);
  }
  // guides
  for (const g of spec.guides) {
    const color = g.color ?? "#888";
    if (g.kind === "hline") {
      if (spec.yScale === "log" && g.value <= 0) continue;
      const py = ay.toPx(g.value);
      if (py > y0 || py < y1) continue;
      parts.push(`<line class="guide" data-value="${g.value.toPrecision(17)}" ` +
        `data-label="${esc(g.label)}" x1="${x0}" y1="${fmt(py)}" ` +
        `x2="${x1}" y2="${fmt(py)}" stroke="${color}" stroke-width="1" ` +
        `stroke-dasharray="5,4"/>`);
      parts.push(`<text x="${x1 - 4}" y="${fmt(py - 4)}" font-size="10" ` +
        `text-anchor="end" fill="${color}">${esc(g.label)}</text>`);
    } else {
      // y = coeff / x sampled across the x range
      const pts: string[] = [];
      const steps = 120;
      for (let i = 0; i <= steps; i++) {
        const lx = Math.log10(ax.lo) +
          (i / steps) * (Math.log10(ax.hi) - Math.log10(ax.lo));
        const vx = spec.xScale === "log"
          ? 10 ** lx : ax.lo + (i / steps) * (ax.hi - ax.lo);
        const vy = g.value / vx;
        if (!Number.isFinite(vy) || (spec.yScale === "log" && vy <= 0)) {
          continue;
        }
        const py = ay.toPx(vy);
        if (py > y0 || py < y1) continue;
        pts.push(`${fmt(ax.toPx(vx))},${fmt(py)}`);
      }
      if (pts.length > 1) {
        parts.push(`<polyline class="guide" ` +
          `data-value="${g.value.toPrecision(17)}" ` +
          `data-label="${esc(g.label)}" points="${pts.join(" ")}" ` +
          `fill="none" stroke="${g.color ?? "#888"}" stroke-width="1" ` +
          `stroke-dasharray="5,4"/>`);
      }
    }
  }
  // series
  for (const s of spec.series) {
    const pts: string[] = [];
    for (let i = 0; i < s.x.length; i++) {
      const vx = s.x[i];
      const vy = s.y[i];
      if (!Number.isFinite(vx) || !Number.isFinite(vy)) continue;
      if (spec.xScale === "log" && vx <= 0) continue;
      if (spec.yScale === "log" && vy <= 0) continue;
      pts.push(`${fmt(ax.toPx(vx))},${fmt(ay.toPx(vy))}`);
    }
    const dash = s.dash ? ` stroke-dasharray="${s.dash}"` : "";
    parts.push(`<polyline class="series" data-label="${esc(s.label)}" ` +
      `points="${pts.join(" ")}" fill="none" stroke="${s.color}" ` +
      `stroke-width="${s.width ?? 1.6}"${dash}/>`);
    if (s.markers) {
      for (const p of pts) {
        const [cx, cy] = p.split(",");
        parts.push(`<circle cx="${cx}" cy="${cy}" r="2.2" ` +
          `fill="${s.color}"/>`);
      }
    }
  }
  // labels, legend
  parts.push(`<text x="${(x0 + x1) / 2}" y="16" font-size="13" ` +
    `text-anchor="middle" font-weight="bold">${esc(spec.title)}</text>`);
  parts.push(`<text x="${(x0 + x1) / 2}" y="${H - 8}" font-size="12" ` +
    `text-anchor="middle">${esc(spec.xLabel)}</text>`);
  parts.push(`<text x="14" y="${(y0 + y1) / 2}" font-size="12" ` +
    `text-anchor="middle" transform="rotate(-90 14 ${(y0 + y1) / 2})">` +
    `${esc(spec.yLabel)}</text>`);
  let ly = y1 + 12;
  for (const s of spec.series) {
    parts.push(`<line x1="${x0 + 8}" y1="${ly - 4}" x2="${x0 + 28}" ` +
      `y2="${ly - 4}" stroke="${s.color}" stroke-width="2"` +
      (s.dash ? ` stroke-dasharray="${s.dash}"` : "") + `/>`);
    parts.push(`<text x="${x0 + 33}" y="${ly}" font-size="10">` +
      `${esc(s.label)}</text>`);
    ly += 13;
  }
  if (!hasData) {
    parts.push(`<text class="no-data" x="${(x0 + x1) / 2}" ` +
      `y="${(y0 + y1) / 2}" font-size="16" text-anchor="middle" ` +
      `fill="#999">no data</text>`);
  }
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
