"""Metrics and case-metadata CSV files.

Metrics CSV columns: ``team,task,stage,case_id,metric,value``. An empty
value is a missing result. Global (per team and stage) values such as mAP
use the case id ``ALL_CASES``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import InputError
from .masks import CaseRecord
from .ranking import MetricTable

__all__ = [
    "ALL_CASES",
    "METRICS_HEADER",
    "MetricRow",
    "format_value",
    "metrics_csv",
    "read_metrics_csv",
    "table_from_rows",
    "read_cases_csv",
    "case_key",
]

ALL_CASES = "ALL_CASES"
METRICS_HEADER = ["team", "task", "stage", "case_id", "metric", "value"]
CASES_HEADER = ["case_id", "stage", "surgery_type", "instrument_count"]


@dataclass(frozen=True)
class MetricRow:
    team: str
    task: str
    stage: int
    case_id: str
    metric: str
    value: float | None

    def sort_key(self):
        return (self.team, self.stage, self.case_id, self.metric)


def format_value(value: float | None) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def metrics_csv(rows: Iterable[MetricRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(METRICS_HEADER)
    for r in rows:
        writer.writerow([r.team, r.task, r.stage, r.case_id, r.metric, format_value(r.value)])
    return buf.getvalue()


def read_metrics_csv(path: str | Path) -> list[MetricRow]:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or any(h not in reader.fieldnames for h in METRICS_HEADER):
            raise InputError(f"{path}: expected header {','.join(METRICS_HEADER)}")
        rows = []
        for line, rec in enumerate(reader, start=2):
            try:
                value = float(rec["value"]) if rec["value"] not in ("", None) else None
                rows.append(
                    MetricRow(rec["team"], rec["task"], int(rec["stage"]), rec["case_id"],
                              rec["metric"], value)
                )
            except ValueError as exc:
                raise InputError(f"{path}:{line}: {exc}") from exc
    return rows


def case_key(stage: int, case_id: str, multi_stage: bool) -> str:
    return f"{stage}/{case_id}" if multi_stage else case_id


def table_from_rows(
    rows: Sequence[MetricRow], metric: str, stage: int | None = None
) -> MetricTable:
    """Per-case table for ``metric``; cells absent for a team are missing.

    Without ``stage`` all stages are pooled and case ids become ``stage/case_id``.
    """
    picked = [r for r in rows if r.metric == metric and r.case_id != ALL_CASES
              and (stage is None or r.stage == stage)]
    if not picked:
        raise InputError(f"no per-case rows for metric {metric!r}"
                         + (f" in stage {stage}" if stage is not None else ""))
    multi = len({r.stage for r in picked}) > 1
    records = [(r.team, case_key(r.stage, r.case_id, multi), r.value) for r in picked]
    return MetricTable.from_records(records)


def read_cases_csv(path: str | Path) -> list[CaseRecord]:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or any(h not in reader.fieldnames for h in ("case_id", "stage")):
            raise InputError(f"{path}: expected header {','.join(CASES_HEADER)}")
        out = []
        for line, rec in enumerate(reader, start=2):
            try:
                out.append(
                    CaseRecord(
                        case_id=rec["case_id"],
                        stage=int(rec["stage"]),
                        surgery_type=rec.get("surgery_type") or "",
                        team=rec.get("team") or "",
                        instrument_count=int(rec.get("instrument_count") or 0),
                    )
                )
            except ValueError as exc:
                raise InputError(f"{path}:{line}: {exc}") from exc
    return out
