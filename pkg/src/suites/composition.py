"""χ collapse, term counts, the factorial bound, subdivision and the continuity pipeline."""

from __future__ import annotations

import logging
import math
from functools import cached_property
from typing import Iterator

import numpy as np

from src.composition.chi import (
    ANCHOR_COLLAPSE,
    ANCHOR_FACTORIAL,
    ANCHOR_TERM_COUNT,
    CurveStack,
    chi_compose,
    chi_sup_bound_check,
    factorial_bound,
    random_unit_stack,
    rescale_stack,
    term_count,
)
from src.composition.pipeline import (
    ANCHOR_FINAL,
    ANCHOR_SUBDIVISION,
    ambient_context,
    continuity_pipeline,
    subdivide_for_chart_bound,
)
from src.core.curves import ConstantCurve, random_algebra_element, random_smooth_curve
from src.core.reports import CheckReport
from src.estimates.witness import EstimateWitness, asymptotic_witness
from src.harness.report import CheckRow
from src.prodint.evolve import evolve

from .base import BaseSuite

logger = logging.getLogger(__name__)

COLLAPSE_RTOL = 1e-7
ASYMPTOTE_RANGE = range(2, 65)
WILD_SUP = 10.0
SMALL_NORM = 0.1
PIPELINE_SUP = 0.999


class CompositionSuite(BaseSuite):
    name = "composition"

    @cached_property
    def witness(self) -> EstimateWitness:
        return asymptotic_witness(self.ctx, self.fam, "op", seed=self.seed, cfg=self.config.estimates)

    @cached_property
    def ambient_witness(self) -> EstimateWitness:
        return asymptotic_witness(ambient_context(self.ctx), self.fam, "op", depth_max=3, samples=100, seed=self.seed)

    def checks(self) -> Iterator[CheckRow]:
        yield from self.collapse()
        yield self.term_counts()
        yield from self.factorial_bounds()
        yield from self.asymptote()
        yield self.precondition_skip()
        yield from self.subdivision()
        yield self.pipeline_batch()

    def collapse(self) -> Iterator[CheckRow]:
        """``∫χ`` against the ordered product of the rescaled unit stack."""
        rng = self.rng(1)
        for n in self.config.suites.collapse_sizes:
            stack = rescale_stack(self.ctx, random_unit_stack(self.ctx, self.fam, "op", n, 1, rng))
            ordered = np.eye(self.ctx.dim)
            for phi in stack:
                ordered = evolve(self.ctx, phi, cfg=self.precise).result @ ordered
            chi = chi_compose(self.ctx, stack, self.precise)
            gap = float(np.linalg.norm(evolve(self.ctx, chi, cfg=self.precise).result - ordered, 2))
            yield self.row(
                CheckReport.compare("collapse", ANCHOR_COLLAPSE, gap, self.tolerance(COLLAPSE_RTOL) * n), n=n
            )

    def term_counts(self) -> CheckRow:
        """``term_count(n, k) = term_count(n, k-1)·(n+k)`` and ``term_count(n, 0) = n``, exactly."""
        worst = 0
        cases = 0
        for n in self.config.suites.stack_sizes:
            worst = max(worst, abs(term_count(n, 0) - n))
            for k in range(1, self.config.suites.max_derivative_order + 1):
                worst = max(worst, abs(term_count(n, k) - term_count(n, k - 1) * (n + k)))
                cases += 1
        return self.row(CheckReport.compare("term-count", ANCHOR_TERM_COUNT, float(worst), 0.0), n=cases)

    def factorial_bounds(self) -> Iterator[CheckRow]:
        rng = self.rng(2)
        for n in self.config.suites.stack_sizes:
            for q in range(self.config.suites.max_derivative_order + 1):
                stack = random_unit_stack(self.ctx, self.fam, self.witness.w_id, n, q, rng)
                report = chi_sup_bound_check(self.ctx, self.fam, self.witness, stack, q, cfg=self.stepper)
                yield self.row(report, n=n, check_id=f"factorial-bound-q{q}")

    def asymptote(self) -> Iterator[CheckRow]:
        """The bound decreases in ``n`` for each ``q`` and stays below ``3e`` at the top of the range."""
        top = ASYMPTOTE_RANGE[-1]
        steps, at_top = [], []
        for q in range(self.config.suites.max_derivative_order + 1):
            values = [factorial_bound(n, q) for n in ASYMPTOTE_RANGE]
            steps.append(max(b / a for a, b in zip(values, values[1:])))
            at_top.append(values[-1])
        yield self.row(CheckReport.compare("factorial-monotone", ANCHOR_FACTORIAL, max(steps), 1.0), n=len(ASYMPTOTE_RANGE))
        yield self.row(CheckReport.compare("factorial-asymptote", ANCHOR_FACTORIAL, max(at_top), 3.0 * math.e), n=top)

    def precondition_skip(self) -> CheckRow:
        """A stack with sup-norm 2 is reported as skipped."""
        n = 2
        unit = random_unit_stack(self.ctx, self.fam, self.witness.w_id, n, 1, self.rng(3))
        scale = 2.0 / unit.sup_norm(self.fam.get(self.witness.w_id), 1)
        doubled = CurveStack.of([scale * c for c in unit])
        return self.row(chi_sup_bound_check(self.ctx, self.fam, self.witness, doubled, 1, cfg=self.stepper), n=n)

    def subdivision(self) -> Iterator[CheckRow]:
        rng = self.rng(4)
        small = ConstantCurve(random_algebra_element(self.ctx, rng, SMALL_NORM))
        report = subdivide_for_chart_bound(self.ctx, self.fam, small, cfg=self.precise)
        yield self.row(CheckReport.compare("subdivision-small", ANCHOR_SUBDIVISION, float(report.m), 1.0), n=report.m)

        phi = random_smooth_curve(self.ctx, rng)
        phi = phi * (WILD_SUP / phi.sup_norm(self.fam.get("op")))
        report = subdivide_for_chart_bound(self.ctx, self.fam, phi, cfg=self.precise)
        measured = report.max_chart_norm if report.verified else (0.0 if report.certified else math.inf)
        yield self.row(
            CheckReport.compare(
                "subdivision", ANCHOR_SUBDIVISION, measured, report.panel_bound if report.certified else 0.0, rtol=1e-9
            ),
            n=report.m,
        )

    def pipeline_batch(self) -> CheckRow:
        """Every curve of the batch with ``op_∞(φ) ≤ 1`` passes all pipeline stages."""
        rng = self.rng(5)
        op = self.fam.get("op")
        count = self.config.suites.pipeline_batch
        failed = 0
        for i in range(count):
            phi = random_smooth_curve(self.ctx, rng)
            phi = phi * (PIPELINE_SUP / phi.sup_norm(op))
            report = continuity_pipeline(
                self.ctx, self.fam, "op", phi,
                cfg=self.stepper, precise=self.precise, witness=self.ambient_witness,
            )
            if not report.passed:
                failed += 1
                logger.warning("continuity pipeline failed at %s for curve %d", report.failed_stage, i)
        return self.row(
            CheckReport.compare("continuity-pipeline", ANCHOR_FINAL, float(failed), 0.0), n=count
        )


SUITE = CompositionSuite


if __name__ == "__main__":
    raise SystemExit(SUITE.main())
