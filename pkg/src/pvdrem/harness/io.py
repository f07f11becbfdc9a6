"""CSV series and JSON metrics output."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .config import dump_config
from .simulate import SERIES_COLUMNS


def write_csv(path, columns, rows):
    """Header plus one line per row; floats are written with ``repr`` (round-trip exact)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([repr(float(v)) for v in row])


def read_csv(path):
    """Return ``(columns, data)`` from a file written by :func:`write_csv`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        columns = tuple(next(reader))
        data = np.array([[float(v) for v in row] for row in reader], dtype=float)
    return columns, data.reshape(-1, len(columns))


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def metrics_document(result, seed=None):
    return _jsonable({
        "name": result.config.name,
        "ok": result.ok,
        "failure": result.failure,
        "seed": seed,
        "wall_time_s": result.wall_time,
        "recovery_holds": result.recovery_holds,
        "metrics": result.metrics.to_dict(),
    })


def write_run(out_dir, result, seed=None):
    """Write ``<series>.csv``, ``metrics.json`` and ``config.txt`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, columns in SERIES_COLUMNS.items():
        write_csv(out / f"{name}.csv", columns, result.series[name])
    with open(out / "metrics.json", "w") as fh:
        json.dump(metrics_document(result, seed), fh, indent=2, sort_keys=True)
        fh.write("\n")
    (out / "config.txt").write_text(dump_config(result.config))
    return out
