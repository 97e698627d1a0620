"""Deterministic report serialization: JSON-style trees and CSV tables.

All floats are written with 17 significant digits so identical runs produce
byte-identical artifacts and values round-trip exactly.
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np


def fmt(x: float) -> str:
    v = float(x)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".17g")


def jsonable(obj):
    """Normalize dataclasses / arrays / numpy scalars into plain trees."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonable(getattr(obj, f.name))
                for f in dataclasses.fields(obj) if not f.name.startswith("_")}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dump_json(obj, indent: int = 0) -> str:
    """JSON text with %.17g floats (deterministic, round-trip exact)."""
    pad = "  " * indent
    pad2 = "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if math.isnan(obj):
            return '"nan"'
        if math.isinf(obj):
            return '"inf"' if obj > 0 else '"-inf"'
        return fmt(obj)
    if isinstance(obj, str):
        return '"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad2}"{k}": {dump_json(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad2 + dump_json(v, indent + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj)}")


def write_json(path, tree):
    with open(path, "w") as fh:
        fh.write(dump_json(jsonable(tree)) + "\n")


def write_csv(path, headers, columns):
    """Columns of equal length; floats at 17 significant digits."""
    rows = len(columns[0]) if columns else 0
    lines = [",".join(headers)]
    for k in range(rows):
        cells = []
        for col in columns:
            v = col[k]
            cells.append(fmt(v) if isinstance(v, (float, np.floating)) else str(v))
        lines.append(",".join(cells))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def summary_lines(verdicts: dict, details: dict | None = None) -> list:
    lines = []
    for name, ok in verdicts.items():
        status = "PASS" if ok else "FAIL"
        extra = ""
        if details and name in details:
            extra = f"  ({details[name]})"
        lines.append(f"[{status}] {name}{extra}")
    total = sum(1 for v in verdicts.values() if v)
    lines.append(f"summary: {total}/{len(verdicts)} checks pass")
    return lines
