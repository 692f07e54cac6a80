"""Atomic, byte-stable CSV and JSON writers."""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from ._version import __version__

__all__ = ["fmt", "write_csv", "write_json", "provenance", "trajectory_header", "to_jsonable"]


def fmt(x) -> str:
    """17 significant digits, enough to round-trip a double."""
    return "%.17g" % (float(x) + 0.0)  # + 0.0 folds -0.0 into 0.0


def _atomic_write(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows):
    """Write a numeric table; every value is formatted with :func:`fmt`."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(x) for x in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def to_jsonable(obj):
    """Convert numpy scalars/arrays and non-finite floats for JSON output."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_json(path, obj):
    _atomic_write(path, json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n")


def provenance(config: dict, integrator: dict = None) -> dict:
    """Fields stamped into every JSON report."""
    return {"tool": "quatsync", "version": __version__, "config": config,
            "integrator": integrator}


def trajectory_header(n_osc: int) -> list:
    cols = ["t"]
    for n in range(1, n_osc + 1):
        cols += [f"w{n}", f"x{n}", f"y{n}", f"z{n}"]
    return cols
