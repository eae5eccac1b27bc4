"""Freeze approximations, sequence classification and the confinement pipeline."""

from __future__ import annotations

import logging
import math
from typing import Iterator, Sequence

import numpy as np

from src.approx.sequences import (
    ANCHOR_MACKEY,
    ANCHOR_UNIFORM,
    Member,
    SequenceReport,
    classify_sequence,
    confined_pipeline,
    freeze_approximate,
    sup_distance,
)
from src.core.contexts import SO3_LX, SO3_LZ
from src.core.curves import ConstantCurve, Curve, PolynomialCurve, TrigCurve, random_algebra_element, random_smooth_curve
from src.core.reports import CheckReport
from src.harness.report import CheckRow

from .base import BaseSuite

logger = logging.getLogger(__name__)

FREEZE_SINE_PANELS = 16
CLASSIFY_LENGTH = 12
GROUP_SCALE = 0.5
CONFINED_LEVELS = 64


class ApproxSuite(BaseSuite):
    name = "approx"

    def checks(self) -> Iterator[CheckRow]:
        yield self.freeze_linear()
        yield self.freeze_sine()
        yield from self.classification()
        yield from self.confined()

    def freeze_linear(self) -> CheckRow:
        """``φ(t) = tX`` is within ``‖X‖/n`` of its ``n``-panel freeze."""
        X = random_algebra_element(self.ctx, self.rng(1))
        phi = PolynomialCurve([np.zeros_like(X), X])
        op = self.fam.get("op")
        reports = [
            CheckReport.compare(
                "freeze-linear", ANCHOR_UNIFORM, sup_distance(freeze_approximate(phi, n), phi, op), op(X) / n,
                notes=[f"n={n}"], rtol=1e-9,
            )
            for n in self.config.suites.scheme_levels
        ]
        return self.row(self.worst(reports))

    def freeze_sine(self) -> CheckRow:
        X = random_algebra_element(self.ctx, self.rng(2))
        phi = TrigCurve(X, 2.0 * math.pi)
        op = self.fam.get("op")
        n = FREEZE_SINE_PANELS
        return self.row(
            CheckReport.compare(
                "freeze-sine", ANCHOR_UNIFORM, sup_distance(freeze_approximate(phi, n), phi, op),
                2.0 * math.pi * op(X) / n, rtol=1e-9,
            ),
            n=n,
        )

    def _classified(self, check_id: str, seq: Sequence[Member], expected: str) -> tuple[CheckRow, SequenceReport]:
        report = classify_sequence(seq, self.fam, ("op", "fro"))
        if report.kind != expected:
            logger.warning("%s classified as %s, expected %s", check_id, report.kind, expected)
        check = CheckReport.compare(
            check_id, ANCHOR_MACKEY, float(report.kind != expected), 0.0,
            notes=[f"kind={report.kind}", f"expected={expected}"],
        )
        return self.row(check, n=len(seq)), report

    def classification(self) -> Iterator[CheckRow]:
        """Known sequences against their expected class, and the fitted envelope against its own evidence."""
        rng = self.rng(3)
        X = random_algebra_element(self.ctx, rng)
        indices = range(1, CLASSIFY_LENGTH + 1)

        row, _ = self._classified("classify-constant", [ConstantCurve(X) for _ in indices], "mackey-cauchy")
        yield row

        perturbed = [ConstantCurve(X * (1.0 + 1.0 / math.factorial(n))) for n in indices]
        row, report = self._classified("classify-factorial", perturbed, "mackey-cauchy")
        yield row

        alternating = [ConstantCurve(X * (-1.0) ** n) for n in indices]
        row, _ = self._classified("classify-alternating", alternating, "neither")
        yield row

        Y = random_algebra_element(self.ctx, rng, GROUP_SCALE)
        elements = [self.ctx.exp_unchecked(Y * (1.0 + 1.0 / math.factorial(n))) for n in indices]
        row, _ = self._classified("classify-group", elements, "mackey-cauchy")
        yield row

        yield self.row(
            CheckReport.compare("envelope-soundness", ANCHOR_MACKEY, float(not report.dominated()), 0.0),
            n=len(report.evidence),
        )

    def confined_curve(self) -> Curve:
        if self.ctx.name == "so3":
            return TrigCurve(SO3_LZ, 2.0 * math.pi) + PolynomialCurve([np.zeros((3, 3)), SO3_LX])
        return random_smooth_curve(self.ctx, self.rng(4))

    def confined(self) -> Iterator[CheckRow]:
        report = confined_pipeline(
            self.ctx, self.fam, self.confined_curve(), n_max=CONFINED_LEVELS,
            cfg=self.stepper, estimates=self.config.estimates, seed=self.seed,
        )
        if not report.passed:
            logger.warning("confined pipeline failed at %s", report.failed_stage)
        yield from self.stage_rows("confined", report, n=CONFINED_LEVELS)


SUITE = ApproxSuite


if __name__ == "__main__":
    raise SystemExit(SUITE.main())
