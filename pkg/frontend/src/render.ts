/** Recipe execution: CSV in, standalone SVG out.  Inputs are never
 * modified; identical inputs yield identical bytes. */

import { readFileSync, writeFileSync } from "fs";
import { loadTable } from "./csv.js";
import { FIGURES } from "./recipes.js";
import { parseToml, TomlTable } from "./toml.js";
import { renderChart } from "./svg.js";

export interface RenderJob {
  fig: string;
  csv: string;
  out: string;
}

export function renderFigure(fig: string, csvPath: string): string {
  const builder = FIGURES[fig];
  if (!builder) {
    throw new Error(
      `unknown figure "${fig}" (known: ${Object.keys(FIGURES).join(", ")})`);
  }
  const table = loadTable(csvPath);
  return renderChart(builder(table));
}

export function runJob(job: RenderJob): string {
  const svg = renderFigure(job.fig, job.csv);
  writeFileSync(job.out, svg);
  return job.out;
}

/** Recipe files share the simulation CLI's TOML syntax:
 *
 *   fig = "6"
 *   csv = "data/dynamic_range.csv"
 *   out = "fig6.svg"
 */
export function loadRecipe(path: string): RenderJob {
  const doc: TomlTable = path.endsWith(".json")
    ? JSON.parse(readFileSync(path, "utf-8"))
    : parseToml(readFileSync(path, "utf-8"));
  const fig = doc["fig"];
  const csv = doc["csv"];
  const out = doc["out"];
  if (fig === undefined || typeof csv !== "string" ||
      typeof out !== "string") {
    throw new Error(`recipe needs fig, csv and out keys (${path})`);
  }
  return { fig: String(fig), csv, out };
}
