"""CSV and JSON writers/readers for run logs, loss curves and comparisons."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .sim import COLUMNS, Comparison, RunLog, RunMetrics

METRICS_SCHEMA_ID = "se3dock.metrics/1"
COMPARE_SCHEMA_ID = "se3dock.compare/1"

HEADER = [f"{name} [{unit}]" for name, unit in COLUMNS]

_METRIC_KEYS = ["settling_time", "reaching_time", "terminal_rho", "control_effort", "chattering_index", "t_max"]

# Never-settled runs report an infinite settling time; JSON carries it as null.
_nullable = {"type": ["number", "null"]}
METRICS_SCHEMA = {
    "type": "object",
    "required": ["schema"] + _METRIC_KEYS,
    "additionalProperties": False,
    "properties": {"schema": {"const": METRICS_SCHEMA_ID}, **{k: _nullable for k in _METRIC_KEYS}},
}
COMPARE_SCHEMA = {
    "type": "object",
    "required": ["schema", "a", "b", "deltas", "claims"],
    "additionalProperties": False,
    "properties": {
        "schema": {"const": COMPARE_SCHEMA_ID},
        "a": METRICS_SCHEMA,
        "b": METRICS_SCHEMA,
        "deltas": {
            "type": "object",
            "required": _METRIC_KEYS[:-1],
            "additionalProperties": False,
            "properties": {k: _nullable for k in _METRIC_KEYS[:-1]},
        },
        "claims": {
            "type": "object",
            "required": ["faster_convergence", "shorter_reaching_phase", "smoother_control"],
            "additionalProperties": False,
            "properties": {
                "faster_convergence": {"type": "boolean"},
                "shorter_reaching_phase": {"type": "boolean"},
                "smoother_control": {"type": "boolean"},
            },
        },
    },
}


class CsvFormatError(ValueError):
    pass


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def log_to_csv(log: RunLog) -> str:
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(HEADER)
    for row in log.table():
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_log(path, log: RunLog) -> None:
    Path(path).write_bytes(log_to_csv(log).encode("utf-8"))


def read_log(path) -> RunLog:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != HEADER:
        raise CsvFormatError(f"{path}: missing or unexpected header")
    try:
        M = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise CsvFormatError(f"{path}: {exc}") from exc
    if len(rows) > 1 and M.shape[1] != len(HEADER):
        raise CsvFormatError(f"{path}: expected {len(HEADER)} columns")
    return RunLog.from_table(M.reshape(-1, len(HEADER)))


def _json_num(x):
    return None if (isinstance(x, float) and math.isinf(x)) or (isinstance(x, float) and math.isnan(x)) else x


def metrics_doc(m: RunMetrics) -> dict:
    return {"schema": METRICS_SCHEMA_ID, **{k: _json_num(v) for k, v in m.as_dict().items()}}


def comparison_doc(c: Comparison) -> dict:
    a = metrics_doc(c.a)
    b = metrics_doc(c.b)
    return {
        "schema": COMPARE_SCHEMA_ID,
        "a": a,
        "b": b,
        "deltas": {k: _json_num(v) for k, v in c.deltas.items()},
        "claims": {
            "faster_convergence": c.faster_convergence,
            "shorter_reaching_phase": c.shorter_reaching_phase,
            "smoother_control": c.smoother_control,
        },
    }


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=False, allow_nan=False) + "\n"


def _cell(x) -> str:
    if isinstance(x, bool):
        return "yes" if x else "no"
    if x is None:
        return "inf"
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return f"{x:.6g}"


def comparison_table(c: Comparison) -> str:
    """Fixed-width text table: metric | a | b | a - b, then the claims."""
    rows = [("metric", "a", "b", "a - b")]
    da, db = c.a.as_dict(), c.b.as_dict()
    for k in _METRIC_KEYS:
        rows.append((k, _cell(da[k]), _cell(db[k]), _cell(c.deltas.get(k, 0.0)) if k != "t_max" else "-"))
    widths = [26, 16, 16, 16]
    lines = ["".join(str(v).ljust(w) for v, w in zip(r, widths)).rstrip() for r in rows]
    lines.insert(1, "-" * sum(widths))
    lines.append("")
    for name in ("faster_convergence", "shorter_reaching_phase", "smoother_control"):
        lines.append(f"{name.ljust(widths[0])}{_cell(getattr(c, name))}")
    return "\n".join(lines) + "\n"


def loss_curves_csv(curves: dict) -> str:
    names = sorted(curves)
    n = len(curves[names[0]]) if names else 0
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["epoch"] + [f"{k}_holdout_loss" for k in names])
    for i in range(n):
        w.writerow([str(i)] + [fmt(curves[k][i]) for k in names])
    return buf.getvalue()
