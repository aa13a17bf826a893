"""Deterministic serialisation helpers shared by the library and the CLI.

Floats are printed with 17 significant digits, exact rationals as
``p/q`` and Gaussian rationals as ``p/q+r/s i``.  JSON output uses sorted
keys so that identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math
from fractions import Fraction
from typing import Any, Iterable, Sequence

from .exactring import GaussianRational

SCHEMA = "curvmag-report/1"


def format_number(x) -> str:
    if x is None:
        return "unknown"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, GaussianRational):
        return str(x)
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return repr(x)
    return format(x, ".17g")


def to_jsonable(obj: Any) -> Any:
    """Convert library values into plain JSON types.

    Exact numbers become strings so nothing is rounded on the way out.
    """
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, int):
        return obj
    if isinstance(obj, (Fraction, GaussianRational)):
        return format_number(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return format_number(obj)
        return obj
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    # numpy scalars and arrays
    if hasattr(obj, "tolist"):
        return to_jsonable(obj.tolist())
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj: Any) -> str:
    """Serialise with sorted keys and 17-digit floats; trailing newline included."""
    return _dump_sorted(to_jsonable(obj)) + "\n"


def _dump_sorted(obj, indent=0) -> str:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        parts = [f"{inner}{json.dumps(k, ensure_ascii=False)}: {_dump_sorted(obj[k], indent + 1)}"
                 for k in sorted(obj)]
        return "{\n" + ",\n".join(parts) + "\n" + pad + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_dump_sorted(v) for v in obj) + "]"
        parts = [inner + _dump_sorted(v, indent + 1) for v in obj]
        return "[\n" + ",\n".join(parts) + "\n" + pad + "]"
    if isinstance(obj, float):
        return format(obj, ".17g")
    return json.dumps(obj, ensure_ascii=False)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_number(v) if not isinstance(v, str) else v for v in row])
    return buf.getvalue()
