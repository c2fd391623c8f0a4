"""Deterministic JSON serialization for analysis outputs.

The batch CLI promises byte-identical output for identical inputs, so we
render JSON ourselves instead of relying on ``json.dumps`` float formatting.
Floats are written with 17 significant digits, which round-trips every
finite double exactly.
"""

from __future__ import annotations

import json
import math

import numpy as np


def _format_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise ValueError(
            "non-finite float %r cannot be serialized; encode it explicitly first" % x
        )
    return format(x, ".17g")


def _write(obj, parts: list) -> None:
    if obj is None:
        parts.append("null")
    elif obj is True:
        parts.append("true")
    elif obj is False:
        parts.append("false")
    elif isinstance(obj, str):
        parts.append(json.dumps(obj))
    elif isinstance(obj, (int, np.integer)):
        parts.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        parts.append(_format_float(float(obj)))
    elif isinstance(obj, dict):
        parts.append("{")
        first = True
        for key, value in obj.items():
            if not isinstance(key, str):
                raise TypeError("object keys must be strings, got %r" % (key,))
            if not first:
                parts.append(",")
            parts.append(json.dumps(key))
            parts.append(":")
            _write(value, parts)
            first = False
        parts.append("}")
    elif isinstance(obj, (list, tuple)):
        parts.append("[")
        for i, value in enumerate(obj):
            if i:
                parts.append(",")
            _write(value, parts)
        parts.append("]")
    elif isinstance(obj, np.ndarray):
        _write(obj.tolist(), parts)
    else:
        raise TypeError("cannot serialize %r" % type(obj))


def dumps(obj) -> str:
    """Render ``obj`` as a compact, deterministic JSON string."""
    parts: list = []
    _write(obj, parts)
    return "".join(parts)


def dump(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(obj))
        fh.write("\n")
