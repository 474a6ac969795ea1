"""Deterministic text output: floats at 17 significant digits everywhere.

17 digits round-trip IEEE doubles exactly, so files written here can be
parsed back to bit-identical values, and identical inputs produce
byte-identical files.
"""

from __future__ import annotations

import json
import math
import sys

__all__ = ["format_float", "to_json_text", "write_text", "csv_text"]


def format_float(x):
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if x == math.inf:
            return "inf"
        if x == -math.inf:
            return "-inf"
        return "%.17g" % x
    return str(x)


def _emit(obj, parts, indent, level):
    pad = " " * (indent * level)
    pad_in = " " * (indent * (level + 1))
    if obj is None:
        parts.append("null")
    elif obj is True:
        parts.append("true")
    elif obj is False:
        parts.append("false")
    elif isinstance(obj, str):
        parts.append(json.dumps(obj))
    elif isinstance(obj, int):
        parts.append(str(obj))
    elif isinstance(obj, float):
        if math.isfinite(obj):
            parts.append("%.17g" % obj)
        else:
            parts.append(json.dumps(format_float(obj)))
    elif isinstance(obj, dict):
        if not obj:
            parts.append("{}")
            return
        parts.append("{\n")
        for k, (key, val) in enumerate(obj.items()):
            parts.append(pad_in)
            parts.append(json.dumps(str(key)))
            parts.append(": ")
            _emit(val, parts, indent, level + 1)
            parts.append(",\n" if k < len(obj) - 1 else "\n")
        parts.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        seq = list(obj)
        if not seq:
            parts.append("[]")
            return
        parts.append("[\n")
        for k, val in enumerate(seq):
            parts.append(pad_in)
            _emit(val, parts, indent, level + 1)
            parts.append(",\n" if k < len(seq) - 1 else "\n")
        parts.append(pad + "]")
    else:
        # numpy scalars and the like
        if hasattr(obj, "item"):
            _emit(obj.item(), parts, indent, level)
        else:
            raise TypeError(f"cannot serialize {type(obj)!r}")


def to_json_text(obj, indent=2):
    parts = []
    _emit(obj, parts, indent, 0)
    parts.append("\n")
    return "".join(parts)


def csv_text(header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_float(v) if isinstance(v, float) else str(v) for v in row))
    return "\n".join(lines) + "\n"


def write_text(path, text):
    """Write to a file, or to stdout when path is None or '-'."""
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
