"""Writing and reading experiment reports (CSV or JSON)."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict
from pathlib import Path

from .experiments import ExperimentReport

META_PREFIX = "# "


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def rows_to_csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def report_to_csv(report: ExperimentReport) -> str:
    """Header, data rows, then one trailing ``# key=value`` metadata line."""
    meta = " ".join(f"{k}={report.metadata[k]}" for k in sorted(report.metadata))
    return rows_to_csv(report.columns, report.rows) + META_PREFIX + meta + "\n"


def parse_csv(text: str) -> tuple[list[str], list[dict]]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    reader = csv.reader(lines)
    columns = next(reader)
    rows = [{c: _parse(v) for c, v in zip(columns, rec)} for rec in reader]
    return columns, rows


def _encode(obj):
    # JSON has no inf/nan; spell them as strings so output stays standard
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {k: _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    return obj


def _decode(obj):
    if obj in ("inf", "-inf", "nan"):
        return float(obj)
    if isinstance(obj, dict):
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    return obj


def report_to_json(report: ExperimentReport) -> str:
    return json.dumps(_encode(asdict(report)), indent=2, sort_keys=False) + "\n"


def report_from_json(text: str) -> ExperimentReport:
    return ExperimentReport(**_decode(json.loads(text)))


def _stem(path: str) -> Path:
    p = Path(path)
    return p.with_suffix("") if p.suffix in (".csv", ".json") else p


def write_report(report: ExperimentReport, output: str, fmt: str = "csv") -> list[Path]:
    """Write the main report and, for CSV, sidecar files for series and matrices."""
    stem = _stem(output)
    stem.parent.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt == "json":
        path = stem.with_suffix(".json")
        path.write_text(report_to_json(report), encoding="utf-8", newline="\n")
        return [path]
    path = stem.with_suffix(".csv")
    path.write_text(report_to_csv(report), encoding="utf-8", newline="\n")
    written.append(path)
    series_rows = series_table(report)
    if series_rows:
        side = stem.parent / f"{stem.name}_series.csv"
        side.write_text(rows_to_csv(list(series_rows[0].keys()), series_rows), encoding="utf-8", newline="\n")
        written.append(side)
    if report.matrices:
        mrows = [{"matrix": name, "row": i + 1, "col": j + 1, "value": float(v)}
                 for name, m in report.matrices.items() for i, r in enumerate(m) for j, v in enumerate(r)]
        side = stem.parent / f"{stem.name}_matrices.csv"
        side.write_text(rows_to_csv(["matrix", "row", "col", "value"], mrows), encoding="utf-8", newline="\n")
        written.append(side)
    return written


def series_table(report: ExperimentReport) -> list[dict]:
    """Long-format plot data (variance-ratio curves with reference lines)."""
    if report.experiment != "variance_ratio" or len(report.series.get("n", [])) < 2:
        return []
    out = []
    ns = report.series["n"]
    for name, values in report.series["ratio"].items():
        out += [{"curve": name, "n": n, "value": v} for n, v in zip(ns, values)]
    for name, values in report.series["reference"].items():
        out += [{"curve": name, "n": n, "value": v} for n, v in zip(ns, values)]
    return out
