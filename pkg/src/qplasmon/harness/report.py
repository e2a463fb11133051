"""Run reports, CSV emission and CSV ingestion."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from qplasmon import __version__
from qplasmon.errors import ParseError, QPlasmonError


@dataclass
class RunReport:
    experiment: str
    columns: list
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def column(self, name):
        return np.array([row[name] for row in self.rows])


def format_value(v) -> str:
    """Locale-independent text for one CSV cell; floats keep 12 significant digits."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return np.format_float_positional(float(v), precision=12, unique=False,
                                          fractional=False, trim="-")
    return str(v)


def csv_text(report: RunReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(report.columns)
    for row in report.rows:
        w.writerow([format_value(row[c]) for c in report.columns])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    return v


def emit_csv(report: RunReport, path) -> Path:
    """Write ``report`` to ``path`` plus a ``.meta.json`` sidecar; returns the CSV path."""
    path = Path(path)
    meta = {
        "experiment": report.experiment,
        "tool_version": __version__,
        "written_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "rows": len(report.rows),
        **report.provenance,
        "summary": report.summary,
    }
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(csv_text(report))
        path.with_suffix(".meta.json").write_text(
            json.dumps(_jsonable(meta), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise QPlasmonError(f"cannot write report to {path}: {exc}") from exc
    return path


def read_table(path, required, numeric):
    """Read a CSV with a header row into a list of dicts.

    ``required`` columns must be present; ``numeric`` ones are converted to
    float. Errors carry the 1-based file line number.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read: {exc}", path) from exc
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if not header or not any(h.strip() for h in header):
        raise ParseError("empty file or missing header", path, 1)
    header = [h.strip() for h in header]
    missing = [c for c in required if c not in header]
    if missing:
        raise ParseError(f"missing column(s) {', '.join(missing)}", path, 1)
    rows = []
    for rec in reader:
        line = reader.line_num
        if not rec or not any(x.strip() for x in rec):
            continue
        if len(rec) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(rec)}", path, line)
        row = dict(zip(header, (x.strip() for x in rec)))
        for c in numeric:
            try:
                row[c] = float(row[c])
            except ValueError:
                raise ParseError(f"column {c!r}: not a number: {row[c]!r}", path, line) from None
        row["_line"] = line
        rows.append(row)
    if not rows:
        raise ParseError("no data rows", path, 2)
    return rows
