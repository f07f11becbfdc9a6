"""Run several scenarios and tabulate their metrics."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from .config import with_overrides
from .simulate import run

TABLE_FIELDS = ("final_param_error_rel", "final_vmpp_error", "param_settling_time",
                "vmpp_settling_time", "quiescent_end", "excitation_verdict")


@dataclass(frozen=True)
class SweepRow:
    label: str
    metrics: object = None
    failure: str | None = None

    def cells(self):
        if self.metrics is None:
            return [self.label] + [""] * len(TABLE_FIELDS) + [self.failure or ""]
        m = self.metrics.to_dict()
        return [self.label] + [_cell(m[f]) for f in TABLE_FIELDS] + [self.failure or ""]


def _cell(v):
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def vary(base, key, values):
    """``[(label, config), ...]`` with ``key`` set to each string in ``values``."""
    out = []
    for v in values:
        cfg = with_overrides(base, {key: v})
        label = f"{key}={v}"
        out.append((label, replace(cfg, name=f"{base.name}[{label}]")))
    return out


def _run_one(item):
    label, config, writer = item
    try:
        result = run(config)
    except Exception as exc:  # noqa: BLE001 - a failing run must not stop the sweep
        return SweepRow(label, None, f"{type(exc).__name__}: {exc}")
    if writer is not None:
        writer(label, result)
    return SweepRow(label, result.metrics, result.failure)


def sweep(labelled_configs, jobs=1, writer=None):
    """Run each ``(label, config)`` and return one :class:`SweepRow` per run, in order.

    Errors are isolated per run.  With ``jobs > 1`` runs execute in worker
    processes; ``writer(label, result)``, if given, must then be picklable.
    """
    items = [(label, cfg, writer) for label, cfg in labelled_configs]
    if jobs <= 1 or len(items) <= 1:
        return [_run_one(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_one, items))


def format_table(rows):
    header = ["run", *TABLE_FIELDS, "failure"]
    body = [row.cells() for row in rows]
    widths = [max(len(str(r[i])) for r in [header] + body) for i in range(len(header))]
    lines = ["  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip() for r in [header] + body]
    return "\n".join(lines)


def table_rows(rows):
    return [["run", *TABLE_FIELDS, "failure"]] + [row.cells() for row in rows]
