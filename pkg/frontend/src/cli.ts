#!/usr/bin/env node
/** Render spinmetro experiment CSVs into SVG figures.
 *
 * Usage:
 *   node dist/cli.js --fig 6 --csv dynamic_range.csv --out fig6.svg
 *   node dist/cli.js --recipe fig6.toml
 *
 * Figure 7 ships as two CSVs (7a, 7b); pass them individually.
 */

import { FIGURE_INPUTS } from "./recipes.js";
import { loadRecipe, runJob } from "./render.js";

function parseArgs(argv: string[]): Map<string, string> {
  const args = new Map<string, string>();
  for (let i = 0; i < argv.length; i++) {
    const a = argv[i];
    if (!a.startsWith("--")) throw new Error(`unexpected argument ${a}`);
    const key = a.slice(2);
    const val = argv[i + 1];
    if (val === undefined) throw new Error(`--${key} needs a value`);
    args.set(key, val);
    i++;
  }
  return args;
}

function main(): number {
  const argv = process.argv.slice(2);
  if (argv.length === 0 || argv.includes("--help")) {
    console.log("usage: cli --fig <k> --csv <file> [--out <file>]");
    console.log("       cli --recipe <file.toml|file.json>");
    console.log("figures and their expected inputs:");
    for (const [fig, input] of Object.entries(FIGURE_INPUTS)) {
      console.log(`  ${fig.padEnd(3)} ${input}`);
    }
    return argv.length === 0 ? 2 : 0;
  }
  try {
    const args = parseArgs(argv);
    const job = args.has("recipe")
      ? loadRecipe(args.get("recipe")!)
      : {
        fig: required(args, "fig"),
        csv: required(args, "csv"),
        out: args.get("out") ?? `fig${args.get("fig")}.svg`,
      };
    const written = runJob(job);
    console.log(written);
    return 0;
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 1;
  }
}

function required(args: Map<string, string>, key: string): string {
  const v = args.get(key);
  if (v === undefined) throw new Error(`--${key} is required`);
  return v;
}

process.exit(main());
