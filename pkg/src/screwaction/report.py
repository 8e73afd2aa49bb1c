"""Deterministic JSON reports and plain-text summary tables."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Mapping

import numpy as np

from .io import write_text_atomic

SIG_DIGITS = 9


def normalize(obj):
    """Recursively convert to JSON-ready values with floats cut to 9 significant digits."""
    if isinstance(obj, Mapping):
        return {str(k): normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [normalize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [normalize(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(f"{x:.{SIG_DIGITS}g}")
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "value"):
        return obj.value
    raise TypeError(f"cannot report value of type {type(obj).__name__}")


def report_text(results) -> str:
    return json.dumps(normalize(results), indent=2, sort_keys=True) + "\n"


def summary_table(results: Mapping) -> str:
    """One line per entry that carries a ``passed`` flag, plus its headline metric."""
    rows = []
    for name in sorted(results):
        r = results[name]
        if not isinstance(r, Mapping) or "passed" not in r:
            continue
        rows.append((name, "PASS" if r["passed"] else "FAIL", str(r.get("headline", ""))))
    if not rows:
        return "(no rows)\n"
    w0 = max(len(r[0]) for r in rows)
    lines = [f"{'name'.ljust(w0)}  result  headline", f"{'-' * w0}  ------  --------"]
    lines += [f"{n.ljust(w0)}  {p.ljust(6)}  {h}" for n, p, h in rows]
    return "\n".join(lines) + "\n"


def emit_report(results: Mapping, path) -> tuple[Path, Path]:
    """Write ``path`` (JSON) and a ``.txt`` summary beside it. Returns both paths."""
    path = Path(path)
    write_text_atomic(path, report_text(results))
    table = path.with_suffix(".txt")
    write_text_atomic(table, summary_table(results))
    return path, table
