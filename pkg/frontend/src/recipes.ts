/** Figure recipes: column mappings, axis scales, and reference-line
 * formulas for each spinmetro `fig <k>` CSV.
 *
 * Guide-line values are always derived from the atom number recorded in the
 * CSV metadata sidecar; no numeric guide value is hard-coded.
 */

import { Table, numericColumn, stringColumn, columnIndex } from "./csv.js";
import { ChartSpec, GuideLine, Series, seriesColor } from "./svg.js";

function metaNumber(table: Table, key: string): number {
  const v = table.meta[key];
  if (typeof v !== "number") {
    throw new Error(`metadata key "${key}" missing or not a number`);
  }
  return v;
}

/** Unique values in first-appearance order. */
function distinct<T>(values: T[]): T[] {
  return [...new Set(values)];
}

function groupedSeries(
  table: Table,
  keyCols: string[],
  xCol: string,
  yCol: string,
  opts: { transform?: (y: number) => number; dashWhen?: (key: string[]) => string | undefined } = {},
): Series[] {
  const keyIdx = keyCols.map((c) => columnIndex(table, c));
  const xs = numericColumn(table, xCol);
  const ys = numericColumn(table, yCol);
  const keys = table.rows.map((r) => keyIdx.map((i) => String(r[i])));
  const labels = distinct(keys.map((k) => k.join("/")));
  const out: Series[] = [];
  labels.forEach((label, li) => {
    const sel = keys.map((k) => k.join("/") === label);
    const x: number[] = [];
    const y: number[] = [];
    for (let i = 0; i < sel.length; i++) {
      if (!sel[i]) continue;
      x.push(xs[i]);
      y.push(opts.transform ? opts.transform(ys[i]) : ys[i]);
    }
    const dash = opts.dashWhen?.(label.split("/"));
    out.push({ label, x, y, color: seriesColor(li), dash });
  });
  return out;
}

function fig1(table: Table): ChartSpec {
  const phi = numericColumn(table, "phi");
  return {
    title: "Measurement response",
    xLabel: "encoded phase",
    yLabel: "outcome mean / variance",
    xScale: "linear",
    yScale: "linear",
    series: [
      { label: "mean", x: phi, y: numericColumn(table, "mean"),
        color: seriesColor(0) },
      { label: "variance", x: phi, y: numericColumn(table, "variance"),
        color: seriesColor(1), dash: "4,3" },
    ],
    guides: [],
  };
}

function estimationFig(table: Table, title: string,
  guideFor: (n: number, r: number) => number,
  guideLabel: (r: number) => string): ChartSpec {
  const n = metaNumber(table, "n_atoms");
  const series = groupedSeries(table, ["repetitions"], "phi", "mse");
  series.forEach((s) => { s.label = `r=${s.label}`; s.markers = true; });
  const reps = distinct(stringColumn(table, "repetitions")).map(Number);
  const guides: GuideLine[] = reps.map((r) => ({
    kind: "hline", value: guideFor(n, r), label: guideLabel(r),
  }));
  return {
    title,
    xLabel: "encoded phase",
    yLabel: "squared estimation error",
    xScale: "linear",
    yScale: "log",
    series,
    guides,
  };
}

function fig2(table: Table): ChartSpec {
  return estimationFig(table, "Coherent-spin-state estimation error",
    (n, r) => 1 / (r * n), (r) => `SQL 1/(${r}N)`);
}

function fig5(table: Table): ChartSpec {
  return estimationFig(table, "GHZ parity estimation error",
    (n, r) => 1 / (r * n * n), (r) => `HL 1/(${r}N^2)`);
}

function fig3(table: Table): ChartSpec {
  const x = numericColumn(table, "estimate");
  return {
    title: "Maximum-likelihood estimate distribution",
    xLabel: "phase estimate",
    yLabel: "density",
    xScale: "linear",
    yScale: "linear",
    series: [
      { label: "simulated", x, y: numericColumn(table, "density"),
        color: seriesColor(0), markers: true },
      { label: "normal 1/(rF)", x,
        y: numericColumn(table, "gaussian_density"),
        color: seriesColor(1), dash: "5,3" },
    ],
    guides: [],
  };
}

function fig4(table: Table): ChartSpec {
  const series = groupedSeries(table, ["estimator", "ratio_label"], "phi",
    "mse", { dashWhen: (k) => (k[0] === "mle" ? "5,3" : undefined) });
  // per-state CRB levels from the data (state-dependent, not N-derived)
  const ratios = distinct(stringColumn(table, "ratio_label"));
  const crbIdx = columnIndex(table, "crb");
  const labIdx = columnIndex(table, "ratio_label");
  const guides: GuideLine[] = ratios.map((label) => {
    const row = table.rows.find((r) => String(r[labIdx]) === label);
    return { kind: "hline", value: Number(row![crbIdx]),
      label: `CRB ${label}` };
  });
  return {
    title: "Squeezed-state estimation error",
    xLabel: "encoded phase",
    yLabel: "squared estimation error",
    xScale: "linear",
    yScale: "log",
    series,
    guides,
  };
}

function fig6(table: Table): ChartSpec {
  const n = metaNumber(table, "n_atoms");
  const series = groupedSeries(table, ["design"], "delta2", "avg_variance",
    { dashWhen: (k) => (k[0] === "ctl_1" ? "2,3" : undefined) });
  return {
    title: "Dynamic range of sensor designs",
    xLabel: "prior variance",
    yLabel: "average estimator variance",
    xScale: "log",
    yScale: "log",
    series,
    guides: [
      { kind: "hline", value: 1 / n, label: "1/N" },
      { kind: "hline", value: Math.PI ** 2 / n ** 2, label: "pi^2/N^2" },
      { kind: "hline", value: 1 / n ** 2, label: "1/N^2" },
    ],
  };
}

function fig7a(table: Table): ChartSpec {
  const n = metaNumber(table, "n_total");
  const series = groupedSeries(table, ["scheme", "variant"], "delta2",
    "avg_variance", { dashWhen: (k) => (k[1] === "optimal" ? "5,3" : undefined) });
  return {
    title: "Attenuated-phase ensembles",
    xLabel: "prior variance",
    yLabel: "average estimator variance",
    xScale: "log",
    yScale: "log",
    series,
    guides: [
      { kind: "hline", value: 1 / n, label: "1/N" },
      { kind: "hline", value: (3 * 2) / (4 * (1 - 4 ** -2)) / n,
        label: "8/(5N)" },
    ],
  };
}

function fig7b(table: Table): ChartSpec {
  const n = metaNumber(table, "n_total");
  const series = groupedSeries(table, ["scheme", "variant"], "delta2",
    "avg_variance", { dashWhen: (k) => (k[1] === "optimal" ? "5,3" : undefined) });
  return {
    title: "Cascaded GHZ ensembles",
    xLabel: "prior variance",
    yLabel: "average estimator variance",
    xScale: "log",
    yScale: "log",
    series,
    guides: [
      { kind: "hline", value: 1 / n, label: "1/N" },
      { kind: "hline", value: 6 / (n ** 2 + 4 * n), label: "6/(N^2+4N)" },
      { kind: "hline", value: 1 / n ** 2, label: "1/N^2" },
    ],
  };
}

function fig8(table: Table): ChartSpec {
  const n = metaNumber(table, "n_atoms");
  const crb = groupedSeries(table, ["state"], "t_over_ta", "fi_y",
    { transform: (f) => 1 / f });
  const qcrb = groupedSeries(table, ["state"], "t_over_ta", "qfi",
    { transform: (q) => 1 / q });
  qcrb.forEach((s, i) => {
    s.label = `${s.label} (QCRB)`;
    s.dash = "5,3";
    s.color = crb[i].color;
  });
  return {
    title: "Phase-estimation bounds under spontaneous emission",
    xLabel: "T / T_A",
    yLabel: "bound on estimator variance",
    xScale: "log",
    yScale: "log",
    series: crb.concat(qcrb),
    guides: [
      { kind: "hline", value: 1 / n, label: "1/N" },
      { kind: "hline", value: 2 / (n ** 2 + 2 * n), label: "2/(N^2+2N)" },
      { kind: "hline", value: 1 / n ** 2, label: "1/N^2" },
    ],
  };
}

function fig9(table: Table): ChartSpec {
  const n = metaNumber(table, "n_atoms");
  const series = groupedSeries(table, ["state"], "t_over_ta",
    "normalized_avar");
  return {
    title: "Allan-variance bound vs interrogation time",
    xLabel: "T / T_A",
    yLabel: "normalized Allan variance",
    xScale: "log",
    yScale: "log",
    series,
    guides: [
      { kind: "inverse-curve", value: 1 / n ** 2, label: "1/(N^2 T)" },
      { kind: "inverse-curve", value: 1 / n, label: "1/(N T)" },
    ],
  };
}

export type RecipeBuilder = (table: Table) => ChartSpec;

export const FIGURES: Record<string, RecipeBuilder> = {
  "1": fig1,
  "2": fig2,
  "3": fig3,
  "4": fig4,
  "5": fig5,
  "6": fig6,
  "7a": fig7a,
  "7b": fig7b,
  "8": fig8,
  "9": fig9,
};

/** CSV basename each figure key expects (documentation + CLI default). */
export const FIGURE_INPUTS: Record<string, string> = {
  "1": "fig1_response.csv",
  "2": "fig2_estimation.csv",
  "3": "fig3_mle_histogram.csv",
  "4": "fig4_sss_estimation.csv",
  "5": "fig5_estimation.csv",
  "6": "fig6_dynamic_range.csv",
  "7a": "fig7a_attenuated.csv",
  "7b": "fig7b_cascade.csv",
  "8": "fig8_decay_scan.csv",
  "9": "fig9_allan_qcrb.csv",
};
