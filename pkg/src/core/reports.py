"""Certificate reports: inequality checks return data, not exceptions."""

from __future__ import annotations

import logging
import math
from typing import Literal, Optional

from pydantic import BaseModel

logger = logging.getLogger(__name__)

Status = Literal["pass", "fail", "skip"]

RATIO_RTOL = 1e-12


def ratio_of(measured: float, bound: float) -> float:
    if bound > 0:
        return measured / bound
    return 0.0 if measured <= 0 else math.inf


class CheckReport(BaseModel):
    """Outcome of one ``measured ≤ bound`` certificate."""

    check: str
    anchor: str
    status: Status
    measured: float
    bound: float
    ratio: float
    samples: int = 0
    notes: list[str] = []

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    @classmethod
    def compare(
        cls,
        check: str,
        anchor: str,
        measured: float,
        bound: float,
        samples: int = 0,
        notes: list[str] | None = None,
        rtol: float = RATIO_RTOL,
    ) -> "CheckReport":
        ratio = ratio_of(measured, bound)
        ok = math.isfinite(measured) and measured <= bound * (1.0 + rtol) + 1e-300
        return cls(
            check=check,
            anchor=anchor,
            status="pass" if ok else "fail",
            measured=measured,
            bound=bound,
            ratio=ratio,
            samples=samples,
            notes=notes or [],
        )

    @classmethod
    def skipped(cls, check: str, anchor: str, reason: str, measured: float = math.nan, bound: float = math.nan) -> "CheckReport":
        return cls(
            check=check,
            anchor=anchor,
            status="skip",
            measured=measured,
            bound=bound,
            ratio=math.nan,
            notes=[reason],
        )


class StageReport(BaseModel):
    """One certificate of a staged pipeline."""

    stage: str
    anchor: str
    status: Status
    measured: float
    bound: float
    notes: list[str] = []

    @classmethod
    def from_check(cls, stage: str, report: CheckReport) -> "StageReport":
        return cls(
            stage=stage,
            anchor=report.anchor,
            status=report.status,
            measured=report.measured,
            bound=report.bound,
            notes=report.notes,
        )


class PipelineReport(BaseModel):
    stages: list[StageReport]
    m: Optional[int] = None
    budget: Optional[float] = None
    notes: list[str] = []

    @property
    def passed(self) -> bool:
        return all(s.status != "fail" for s in self.stages)

    @property
    def failed_stage(self) -> Optional[str]:
        return next((s.stage for s in self.stages if s.status == "fail"), None)


def record_stage(
    stages: list[StageReport],
    stage: str,
    anchor: str,
    measured: float,
    bound: float,
    notes: list[str] | None = None,
    rtol: float = RATIO_RTOL,
) -> bool:
    """Append the ``measured ≤ bound`` certificate of one stage; ``True`` when it passed."""
    report = CheckReport.compare(stage, anchor, measured, bound, notes=notes, rtol=rtol)
    stages.append(StageReport.from_check(stage, report))
    if not report.passed:
        logger.warning("stage %s failed (%.6g > %.6g)", stage, measured, bound)
    return report.passed
