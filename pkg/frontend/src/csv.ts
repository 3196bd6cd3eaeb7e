/** RFC-4180 CSV reading plus the `.meta.json` sidecar convention. */

import { readFileSync, existsSync } from "fs";

export interface Table {
  columns: string[];
  rows: (string | number)[][];
  meta: Record<string, unknown>;
}

export class MissingColumnError extends Error {
  constructor(public column: string, available: string[]) {
    super(`missing column "${column}" (available: ${available.join(", ")})`);
  }
}

/** Parse RFC-4180 text: quoted fields, escaped quotes, CRLF tolerant. */
export function parseCsv(text: string): (string | number)[][] {
  const rows: (string | number)[][] = [];
  let field = "";
  let row: (string | number)[] = [];
  let inQuotes = false;
  let sawAny = false;
  const pushField = () => {
    row.push(coerce(field));
    field = "";
  };
  const pushRow = () => {
    pushField();
    rows.push(row);
    row = [];
  };
  for (let i = 0; i < text.length; i++) {
    const c = text[i];
    if (inQuotes) {
      if (c === '"') {
        if (text[i + 1] === '"') {
          field += '"';
          i++;
        } else {
          inQuotes = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c === '"') {
      inQuotes = true;
      sawAny = true;
    } else if (c === ",") {
      pushField();
    } else if (c === "\n") {
      pushRow();
    } else if (c !== "\r") {
      field += c;
      sawAny = true;
    }
  }
  if (field.length > 0 || row.length > 0) pushRow();
  if (!sawAny) return [];
  return rows;
}

function coerce(field: string): string | number {
  if (field.trim() === "") return field;
  const v = Number(field);
  return Number.isNaN(v) ? field : v;
}

/** Load a CSV produced by the spinmetro CLI together with its sidecar. */
export function loadTable(path: string): Table {
  const rows = parseCsv(readFileSync(path, "utf-8"));
  if (rows.length === 0) {
    throw new Error(`${path} has no header row`);
  }
  const columns = rows[0].map(String);
  let meta: Record<string, unknown> = {};
  const sidecar = path + ".meta.json";
  if (existsSync(sidecar)) {
    meta = JSON.parse(readFileSync(sidecar, "utf-8"));
  }
  return { columns, rows: rows.slice(1), meta };
}

export function columnIndex(table: Table, name: string): number {
  const idx = table.columns.indexOf(name);
  if (idx < 0) throw new MissingColumnError(name, table.columns);
  return idx;
}

export function numericColumn(table: Table, name: string): number[] {
  const idx = columnIndex(table, name);
  return table.rows.map((r) => Number(r[idx]));
}

export function stringColumn(table: Table, name: string): string[] {
  const idx = columnIndex(table, name);
  return table.rows.map((r) => String(r[idx]));
}
