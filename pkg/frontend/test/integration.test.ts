/** Structural checks against real simulation output.
 *
 * Set FIGPLOTS_DATA_DIR to a directory holding `spinmetro fig <k>` CSVs
 * (e.g. produced by `spinmetro --out data fig 6`); the suite is skipped when
 * the directory is absent so the frontend tests stay self-contained.
 */

import { existsSync } from "fs";
import { join } from "path";
import { describe, expect, it } from "vitest";

import { FIGURE_INPUTS } from "../src/recipes.js";
import { renderFigure } from "../src/render.js";
import { loadTable } from "../src/csv.js";

const dataDir = process.env.FIGPLOTS_DATA_DIR ?? "";
const available = dataDir !== "" && existsSync(dataDir);

describe.skipIf(!available)("real figure data", () => {
  for (const [fig, input] of Object.entries(FIGURE_INPUTS)) {
    it(`fig ${fig} renders with guides from metadata`, () => {
      const csv = join(dataDir, input);
      if (!existsSync(csv)) return; // partial data sets are fine
      const svg = renderFigure(fig, csv);
      expect(svg.startsWith("<svg")).toBe(true);
      expect(svg).toContain('class="series"');
      const meta = loadTable(csv).meta as Record<string, number>;
      const n = (meta.n_atoms ?? meta.n_total) as number;
      const values = [...svg.matchAll(/data-value="([^"]+)"/g)]
        .map((m) => Number(m[1]));
      if (fig === "6") {
        expect(values).toContain(1 / n);
        expect(values).toContain(Math.PI ** 2 / n ** 2);
        expect(values).toContain(1 / n ** 2);
      }
      if (fig === "2") {
        expect(values).toContain(1 / (100 * n));
      }
      if (fig === "7b") {
        expect(values).toContain(6 / (n ** 2 + 4 * n));
      }
      if (fig === "9") {
        expect(values).toContain(1 / n ** 2);
      }
    });
  }
});
