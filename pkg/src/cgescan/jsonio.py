"""Deterministic JSON text: insertion key order, floats with 17 significant digits."""

from __future__ import annotations

import json
import math
from enum import Enum

import numpy as np


def _float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise ValueError(f"cannot encode non-finite float {x!r}")
    text = "%.17g" % x
    if not any(c in text for c in ".en"):
        text += ".0"
    return text


def _encode(obj, out: list[str]) -> None:
    if obj is None or isinstance(obj, (bool, np.bool_)):
        out.append("null" if obj is None else ("true" if obj else "false"))
    elif isinstance(obj, Enum):
        _encode(obj.value, out)
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_float(float(obj)))
    elif isinstance(obj, np.ndarray):
        _encode(obj.tolist(), out)
    elif isinstance(obj, dict):
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(", ")
            out.append(json.dumps(str(k.value if isinstance(k, Enum) else k)))
            out.append(": ")
            _encode(v, out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, v in enumerate(obj):
            if i:
                out.append(", ")
            _encode(v, out)
        out.append("]")
    else:
        raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj) -> str:
    """One-line JSON; identical objects always produce identical text."""
    out: list[str] = []
    _encode(obj, out)
    return "".join(out)
