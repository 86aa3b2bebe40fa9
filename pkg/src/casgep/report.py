"""Deterministic JSON/CSV serialization with atomic writes."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile

import numpy as np


def jsonable(obj):
    """Plain JSON types; non-finite floats become ``None``."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps(obj) -> str:
    # json writes floats with repr, which round-trips exactly
    return json.dumps(jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return "" if v is None else str(v)


def write_atomic(path, text: str) -> None:
    """Write to a temporary file in the same directory, then rename over ``path``."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_report(out_dir, name: str, report: dict | None = None, table=None, fmt: str | None = None) -> list:
    """Write ``<name>.json`` and/or ``<name>.csv``; ``table`` is ``(header, rows)``.

    ``fmt`` is ``"json"``, ``"csv"`` or ``None`` for both. Returns the paths written.
    """
    written = []
    if report is not None and fmt in (None, "json"):
        p = os.path.join(out_dir, name + ".json")
        write_atomic(p, dumps(report))
        written.append(p)
    if table is not None and fmt in (None, "csv"):
        p = os.path.join(out_dir, name + ".csv")
        write_atomic(p, csv_text(*table))
        written.append(p)
    return written
