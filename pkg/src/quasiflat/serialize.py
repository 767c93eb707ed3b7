"""Deterministic text output: floats with 17 significant digits, sorted keys, '\\n' endings."""
from __future__ import annotations

import csv
import io
import math
from pathlib import Path

import numpy as np

__all__ = ["fmt_float", "dumps_json", "write_json", "write_csv", "csv_text", "read_points_csv"]


def fmt_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _json_value(v, indent, level):
    pad = " " * (indent * (level + 1)) if indent else ""
    end = " " * (indent * level) if indent else ""
    nl = "\n" if indent else ""
    sep = "," + nl if indent else ", "
    if isinstance(v, dict):
        if not v:
            return "{}"
        items = [f'{pad}{_json_str(str(k))}: {_json_value(v[k], indent, level + 1)}' for k in sorted(v, key=str)]
        return "{" + nl + sep.join(items) + nl + end + "}"
    if isinstance(v, (list, tuple, np.ndarray)):
        seq = v.tolist() if isinstance(v, np.ndarray) else v
        if not seq:
            return "[]"
        if all(not isinstance(u, (dict, list, tuple, np.ndarray)) for u in seq):
            return "[" + ", ".join(_json_value(u, 0, 0) for u in seq) + "]"
        return "[" + nl + sep.join(pad + _json_value(u, indent, level + 1) for u in seq) + nl + end + "]"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if v is None:
        return "null"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        x = float(v)
        if math.isnan(x):
            return "null"
        if math.isinf(x):
            return '"Infinity"' if x > 0 else '"-Infinity"'
        return fmt_float(x)
    return _json_str(str(v))


def _json_str(s: str) -> str:
    import json
    return json.dumps(s)


def dumps_json(obj, indent: int = 2) -> str:
    return _json_value(obj, indent, 0) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps_json(obj), encoding="utf-8", newline="\n")


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def write_csv(path, header, rows) -> None:
    Path(path).write_text(csv_text(header, rows), encoding="utf-8", newline="\n")


def read_points_csv(path) -> np.ndarray:
    """Numeric CSV with a header row; all columns are coordinates."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise ValueError(f"{path}: no data rows")
    return np.array([[float(v) for v in r] for r in rows[1:] if r], float)
