"""Canonical JSON serialization.

Every artifact this package writes (forests, diagrams, vineyards, sessions,
HTTP responses) goes through :func:`dumps` so that the CLI and the service
produce byte-identical output for the same request.  Floats are rendered with
17 significant digits, which round-trips IEEE doubles exactly; dict key order
is insertion order, which every writer in this package keeps canonical.
"""

from __future__ import annotations

import json
import math
from typing import Any

__all__ = ["dumps", "loads", "format_float"]


def format_float(x: float) -> str:
    if math.isnan(x):
        raise ValueError("NaN is not serializable")
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(float(x), ".17g")


def _write(obj: Any, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(format_float(obj))
    elif isinstance(obj, dict):
        out.append("{")
        first = True
        for key, value in obj.items():
            if not isinstance(key, str):
                raise TypeError(f"non-string key {key!r}")
            if not first:
                out.append(",")
            first = False
            out.append(json.dumps(key, ensure_ascii=False))
            out.append(":")
            _write(value, out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        first = True
        for value in obj:
            if not first:
                out.append(",")
            first = False
            _write(value, out)
        out.append("]")
    else:
        # numpy scalars and similar: defer to their Python equivalents
        if hasattr(obj, "item"):
            _write(obj.item(), out)
        else:
            raise TypeError(f"unsupported type {type(obj)!r}")


def dumps(obj: Any) -> str:
    out: list[str] = []
    _write(obj, out)
    return "".join(out)


def loads(text: str) -> Any:
    return json.loads(text)
