"""Canonical JSON: sorted keys, floats at 17 significant digits."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1


def _float(v: float) -> str:
    if not math.isfinite(v):
        raise ValueError(f"non-finite number {v!r} cannot be written to a report")
    s = format(v, ".17g")
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def _encode(obj, out: list) -> None:
    if obj is None or isinstance(obj, (bool, np.bool_)):
        out.append(json.dumps(None if obj is None else bool(obj)))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_float(float(obj)))
    elif isinstance(obj, (complex, np.complexfloating)):
        _encode({"re": obj.real, "im": obj.imag}, out)
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=True))
    elif isinstance(obj, dict):
        out.append("{")
        for n, key in enumerate(sorted(obj, key=str)):
            if n:
                out.append(",")
            out.append(json.dumps(str(key), ensure_ascii=True))
            out.append(":")
            _encode(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for n, item in enumerate(obj):
            if n:
                out.append(",")
            _encode(item, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")


def canonical_json(obj) -> str:
    out: list[str] = []
    _encode(obj, out)
    return "".join(out) + "\n"


def build_report(command: str, results: dict | None = None, metadata: dict | None = None) -> dict:
    meta = {"tool": "qdat", "format_version": FORMAT_VERSION, "command": command}
    meta.update(metadata or {})
    return {"metadata": meta, "results": results or {}}


def emit_report(results: dict, path) -> None:
    """Write ``results`` as canonical JSON.  OSError propagates on unwritable paths."""
    Path(path).write_text(canonical_json(results), encoding="ascii")


def read_report(path) -> dict:
    return json.loads(Path(path).read_text(encoding="ascii"))
