/** Minimal TOML subset for recipe files: top-level tables, string / number /
 * boolean scalars and flat arrays.  Matches the config syntax of the
 * simulation CLI without pulling in a dependency. */

export type TomlValue = string | number | boolean | TomlValue[];
export type TomlTable = { [key: string]: TomlValue | TomlTable };

export function parseToml(text: string): TomlTable {
  const root: TomlTable = {};
  let current = root;
  for (const rawLine of text.split(/\r?\n/)) {
    const line = stripComment(rawLine).trim();
    if (!line) continue;
    const header = line.match(/^\[([A-Za-z0-9_.-]+)\]$/);
    if (header) {
      const table: TomlTable = {};
      root[header[1]] = table;
      current = table;
      continue;
    }
    const kv = line.match(/^([A-Za-z0-9_-]+)\s*=\s*(.+)$/);
    if (!kv) throw new Error(`cannot parse TOML line: ${rawLine}`);
    current[kv[1]] = parseValue(kv[2].trim());
  }
  return root;
}

function stripComment(line: string): string {
  let inString = false;
  for (let i = 0; i < line.length; i++) {
    if (line[i] === '"') inString = !inString;
    if (line[i] === "#" && !inString) return line.slice(0, i);
  }
  return line;
}

function parseValue(raw: string): TomlValue {
  if (raw.startsWith("[")) {
    if (!raw.endsWith("]")) throw new Error(`unterminated array: ${raw}`);
    const inner = raw.slice(1, -1).trim();
    if (!inner) return [];
    return splitTopLevel(inner).map((v) => parseValue(v.trim()));
  }
  if (raw.startsWith('"')) {
    const m = raw.match(/^"((?:[^"\\]|\\.)*)"$/);
    if (!m) throw new Error(`unterminated string: ${raw}`);
    return m[1].replace(/\\"/g, '"').replace(/\\\\/g, "\\");
  }
  if (raw === "true") return true;
  if (raw === "false") return false;
  const v = Number(raw);
  if (!Number.isNaN(v)) return v;
  throw new Error(`cannot parse TOML value: ${raw}`);
}

function splitTopLevel(inner: string): string[] {
  const parts: string[] = [];
  let depth = 0;
  let inString = false;
  let cur = "";
  for (const c of inner) {
    if (c === '"') inString = !inString;
    if (!inString) {
      if (c === "[") depth++;
      if (c === "]") depth--;
      if (c === "," && depth === 0) {
        parts.push(cur);
        cur = "";
        continue;
      }
    }
    cur += c;
  }
  if (cur.trim()) parts.push(cur);
  return parts;
}
