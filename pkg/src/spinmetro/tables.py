"""Result tables with deterministic CSV/JSON emission.

CSV files follow RFC-4180 quoting with reals at 17 significant digits;
metadata (config hash, parameters, documented defaults) lives in a sidecar
`<file>.meta.json` since CSV has no comment syntax.  JSON output embeds the
same metadata inline.  Identical inputs produce byte-identical files.
"""

import csv
import hashlib
import io
import json
import os
from dataclasses import dataclass, field


class TableError(Exception):
    pass


@dataclass
class ResultTable:
    columns: list
    rows: list
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for i, row in enumerate(self.rows):
            if len(row) != len(self.columns):
                raise TableError(
                    f"row {i} has {len(row)} fields, expected "
                    f"{len(self.columns)}")

    def column(self, name):
        idx = self.columns.index(name)
        return [row[idx] for row in self.rows]


def canonical_json(obj):
    """Whitespace-insensitive canonical encoding used for hashing."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=True, default=_json_fallback)


def _json_fallback(obj):
    try:
        import numpy as np

        if isinstance(obj, np.integer):
            return int(obj)
        if isinstance(obj, np.floating):
            return float(obj)
        if isinstance(obj, np.ndarray):
            return obj.tolist()
    except ImportError:
        pass
    raise TypeError(f"not JSON-serializable: {type(obj)}")


def config_hash(cfg):
    """Hash of the semantic config content (key order / whitespace ignored)."""
    return hashlib.sha256(canonical_json(cfg).encode()).hexdigest()


def _format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


# wall-clock timings stay available programmatically but are stripped from
# emitted files so identical inputs give byte-identical outputs
VOLATILE_META_KEYS = ("wall_time_s",)


def _stable_meta(meta):
    return {k: v for k, v in meta.items() if k not in VOLATILE_META_KEYS}


def write_table(table, path, fmt="csv"):
    """Emit a ResultTable; returns the list of files written."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([_format_value(v) for v in row])
        _write_atomic(path, buf.getvalue())
        meta_path = path + ".meta.json"
        _write_atomic(meta_path, canonical_json(_stable_meta(table.meta))
                      + "\n")
        return [path, meta_path]
    if fmt == "json":
        payload = {"meta": _stable_meta(table.meta),
                   "columns": table.columns,
                   "rows": [list(r) for r in table.rows]}
        _write_atomic(path, json.dumps(payload, sort_keys=True, indent=1,
                                       default=_json_fallback) + "\n")
        return [path]
    raise TableError(f"unknown format {fmt!r}")


def _write_atomic(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(directory, exist_ok=True)
        tmp = path + ".tmp"
        with open(tmp, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise TableError(f"cannot write {path}: {exc}") from exc


def read_json_table(path):
    with open(path) as fh:
        payload = json.load(fh)
    return ResultTable(payload["columns"], [tuple(r) for r in payload["rows"]],
                       payload["meta"])


def read_csv_table(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows:
        raise TableError(f"{path} is empty")
    columns, data = rows[0], rows[1:]
    meta = {}
    meta_path = path + ".meta.json"
    if os.path.exists(meta_path):
        with open(meta_path) as fh:
            meta = json.load(fh)
    parsed = []
    for row in data:
        out = []
        for v in row:
            try:
                out.append(float(v) if ("." in v or "e" in v or "E" in v
                                        or v.lstrip("-").isdigit())
                           else v)
            except ValueError:
                out.append(v)
        parsed.append(tuple(out))
    return ResultTable(columns, parsed, meta)
