"""CSV/JSON serialisation of paths and reports, with atomic writes."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .stationary import SeriesPath


def fmt(x) -> str:
    """17 significant digits, enough to round-trip any double."""
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def atomic_write_text(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def json_text(obj) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj):
    atomic_write_text(path, json_text(obj))


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def path_csv_text(path: SeriesPath) -> str:
    """Columns ``index,e,y`` plus ``alpha`` for closed-form paths."""
    e = path.aligned_innovations
    if path.alpha is not None:
        rows = zip(path.index, e, path.values, path.alpha.alpha.astype(int))
        return csv_text(["index", "e", "y", "alpha"], rows)
    return csv_text(["index", "e", "y"], zip(path.index, e, path.values))


def write_path_csv(path: SeriesPath, file):
    atomic_write_text(file, path_csv_text(path))


def read_path_csv(file, q: int, d: int = 1) -> SeriesPath:
    """Load a path written by :func:`write_path_csv`.

    The file only stores ``e_n`` next to ``y_n``, so the first ``q`` rows
    serve as pre-sample innovations; their ``y`` values become the lag
    history when ``q >= d``.
    """
    with open(file, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or not {"index", "e", "y"} <= set(rows[0]):
        raise ValueError(f"{file}: expected a header with index,e,y")
    idx = np.array([int(r["index"]) for r in rows])
    e = np.array([float(r["e"]) for r in rows])
    y = np.array([float(r["y"]) for r in rows])
    if len(rows) <= q:
        raise ValueError(f"{file}: need more than q={q} rows")
    history = y[q - d : q] if q >= d else None
    return SeriesPath(values=y[q:], innovations=e, q=q, start=int(idx[q]), method="file",
                      history=history, meta={"skipped_rows": q})


def report_csv_text(report) -> str:
    """``lag,value,se,band`` rows for an ACF or dependence report."""
    se = report.se if getattr(report, "se", None) is not None else [None] * len(report.lags)
    band = getattr(report, "band", None)
    rows = ((k, v, s, band) for k, v, s in zip(report.lags, report.values, se))
    return csv_text(["lag", "value", "se", "band"], rows)


def report_summary(report) -> dict:
    fit = report.decay_fit
    out = {
        "rate": None if fit is None else fit.rate,
        "r2": None if fit is None else fit.r2,
        "lag_range": None if fit is None else list(fit.lag_range),
        "n": getattr(report, "n", None) or getattr(report, "replicates", None),
    }
    if fit is not None:
        out["slope"] = fit.slope
        out["slope_se"] = fit.slope_se
    out.update(report.meta)
    return out
