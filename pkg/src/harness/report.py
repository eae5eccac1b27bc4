"""Report rows and their CSV / JSON-lines serialisation."""

from __future__ import annotations

import csv
import io
import json
from typing import Iterable, Literal, Optional, TextIO

from pydantic import BaseModel

from src.core.reports import CheckReport, StageReport, Status, ratio_of

COLUMNS = ["suite", "check_id", "anchor", "n", "measured", "bound", "ratio", "pass"]

OutputFormat = Literal["csv", "jsonl"]


class CheckRow(BaseModel):
    suite: str
    check_id: str
    anchor: str
    n: Optional[int] = None
    measured: float
    bound: float
    ratio: float
    status: Status

    @classmethod
    def from_report(cls, suite: str, report: CheckReport, n: Optional[int] = None, check_id: Optional[str] = None) -> "CheckRow":
        return cls(
            suite=suite,
            check_id=check_id or report.check,
            anchor=report.anchor,
            n=n if n is not None else (report.samples or None),
            measured=report.measured,
            bound=report.bound,
            ratio=report.ratio,
            status=report.status,
        )

    @classmethod
    def from_stage(cls, suite: str, stage: StageReport, check_id: str, n: Optional[int] = None) -> "CheckRow":
        return cls(
            suite=suite,
            check_id=check_id,
            anchor=stage.anchor,
            n=n,
            measured=stage.measured,
            bound=stage.bound,
            ratio=ratio_of(stage.measured, stage.bound),
            status=stage.status,
        )

    def cells(self) -> list[str]:
        return [
            self.suite,
            self.check_id,
            self.anchor,
            "" if self.n is None else str(self.n),
            repr(self.measured),
            repr(self.bound),
            repr(self.ratio),
            self.status,
        ]

    def record(self) -> dict:
        return dict(zip(COLUMNS, [self.suite, self.check_id, self.anchor, self.n, self.measured, self.bound, self.ratio, self.status]))


def write_rows(rows: Iterable[CheckRow], out: TextIO, fmt: OutputFormat = "csv") -> int:
    """Write rows in the fixed column order; returns the number written."""
    count = 0
    if fmt == "csv":
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in rows:
            writer.writerow(row.cells())
            count += 1
    elif fmt == "jsonl":
        for row in rows:
            out.write(json.dumps(row.record(), ensure_ascii=False) + "\n")
            count += 1
    else:
        raise ValueError(f"unknown output format {fmt!r}")
    return count


def render_rows(rows: Iterable[CheckRow], fmt: OutputFormat = "csv") -> str:
    buf = io.StringIO()
    write_rows(rows, buf, fmt)
    return buf.getvalue()
