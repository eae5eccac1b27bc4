"""Adjoint transport: ODE defect, AI residual, Λ-scheme convergence, Duhamel series, bounds."""

from __future__ import annotations

import logging
import math
from typing import Iterator

import numpy as np

from src.adjoint.scheme import (
    ANCHOR_DEFECT,
    ANCHOR_SCHEME,
    TransportScheme,
    defect_decomposition,
    transport_scheme,
)
from src.adjoint.transport import (
    ANCHOR_AI,
    ANCHOR_DUHAMEL,
    ANCHOR_ODE,
    ANCHOR_UNIQUENESS,
    adjoint_ode_defect,
    duhamel_series,
    interleaved_bound_check,
    scheme_residual,
    solve_adjoint_equation,
    transport_curve,
)
from src.core.curves import Curve, random_algebra_element, random_smooth_curve
from src.core.reports import CheckReport
from src.harness.report import CheckRow

from .base import BaseSuite

logger = logging.getLogger(__name__)

ODE_TOLERANCE = 1e-6
AI_TOLERANCE = 1e-8
DUHAMEL_TOLERANCE = 1e-10
UNIQUENESS_TOLERANCE = 1e-8
IDENTITY_TOLERANCE = 1e-10
DEFECT_PANELS = 8
DUHAMEL_CASES = 8


class AdjointSuite(BaseSuite):
    name = "adjoint"

    def cases(self, count: int, stream: int) -> list[tuple[Curve, np.ndarray]]:
        rng = self.rng(stream)
        return [
            (random_smooth_curve(self.ctx, rng), random_algebra_element(self.ctx, rng, float(rng.uniform(0.5, 1.0))))
            for _ in range(count)
        ]

    @property
    def few(self) -> int:
        return max(1, self.config.suites.transport_cases // 10)

    def checks(self) -> Iterator[CheckRow]:
        yield self.ode_defect()
        yield self.ai_residual()
        yield from self.scheme_convergence()
        yield self.duhamel()
        yield self.uniqueness()
        yield from self.defects()
        yield self.row(
            interleaved_bound_check(
                self.ctx, self.fam, self.rng(7), cases=self.config.suites.interleaved_cases, cfg=self.stepper
            )
        )

    def ode_defect(self) -> CheckRow:
        rng = self.rng(1)
        worst = 0.0
        count = self.config.suites.transport_cases
        op = self.fam.get("op")
        for _ in range(count):
            phi = random_smooth_curve(self.ctx, rng)
            psi = random_smooth_curve(self.ctx, rng)
            defect = adjoint_ode_defect(self.ctx, phi, psi, self.precise)
            worst = max(worst, defect.sup_norm(op, n=17))
        return self.row(CheckReport.compare("adjoint-ode", ANCHOR_ODE, worst, self.tolerance(ODE_TOLERANCE)), n=count)

    def ai_residual(self) -> CheckRow:
        worst = 0.0
        for phi, Y in self.cases(self.few, 2):
            alpha = transport_scheme(self.ctx, phi, TransportScheme(n=DEFECT_PANELS), Y).as_curve()
            worst = max(worst, scheme_residual(self.ctx, phi, alpha, cfg=self.precise, qcfg=self.config.quadrature))
        return self.row(CheckReport.compare("ai-residual", ANCHOR_AI, worst, self.tolerance(AI_TOLERANCE)), n=self.few)

    def scheme_convergence(self) -> Iterator[CheckRow]:
        """Sup errors over the configured levels must shrink, at least like ``1/n``."""
        levels = sorted(self.config.suites.scheme_levels)
        op = self.fam.get("op")
        monotone, order = [], []
        for phi, Y in self.cases(self.few, 3):
            exact = transport_curve(self.ctx, phi, Y, self.precise)
            times = phi.sample_times(17)
            reference = [exact.eval(t) for t in times]
            errors = []
            for n in levels:
                scheme = transport_scheme(self.ctx, phi, TransportScheme(n=n), Y)
                errors.append(max(op(scheme(t) - ref) for t, ref in zip(times, reference)))
            logger.debug("Λ-scheme errors over %s: %s", levels, errors)
            monotone.append(max(b / a if a > 0 else (0.0 if b == 0 else math.inf) for a, b in zip(errors, errors[1:])))
            first, last = errors[0] * levels[0], errors[-1] * levels[-1]
            order.append(last / first if first > 0 else 0.0)
        yield self.row(CheckReport.compare("scheme-monotone", ANCHOR_SCHEME, max(monotone), 1.0), n=len(levels))
        yield self.row(CheckReport.compare("scheme-order", ANCHOR_SCHEME, max(order), 1.0), n=len(levels))

    def duhamel(self) -> CheckRow:
        """Truncated series against ``exp(tX)·Y·exp(-tX)``; truncation from the persisted ball witness."""
        witness = self.persisted_witness
        if not witness.certified:
            return self.row(CheckReport.skipped("duhamel", ANCHOR_DUHAMEL, "persisted witness is not certified"))
        rng = self.rng(4)
        Xs = [random_algebra_element(self.ctx, rng, float(rng.uniform(0.1, 1.0))) for _ in range(DUHAMEL_CASES)]
        tol = self.tolerance(DUHAMEL_TOLERANCE)
        worst = 0.0
        for X in Xs:
            Y = random_algebra_element(self.ctx, rng)
            t = float(rng.uniform(-1.0, 1.0))
            series, terms = duhamel_series(self.ctx, X, Y, t, tol * 1e-2, witness, self.fam)
            g = self.ctx.exp_unchecked(t * X)
            closed = g @ Y @ self.ctx.inverse_unchecked(g)
            logger.debug("Duhamel series used %d terms at t=%.3f", terms, t)
            worst = max(worst, float(np.linalg.norm(series - closed, 2)))
        return self.row(
            CheckReport.compare("duhamel", ANCHOR_DUHAMEL, worst, tol, notes=[f"C={witness.C!r}"]), n=len(Xs)
        )

    def uniqueness(self) -> CheckRow:
        worst = 0.0
        count = self.config.suites.uniqueness_cases
        for phi, Y in self.cases(count, 5):
            times = phi.sample_times(9)
            solved = solve_adjoint_equation(self.ctx, phi, Y, times)
            transported = transport_curve(self.ctx, phi, Y, self.precise)
            worst = max(worst, max(float(np.linalg.norm(a - transported.eval(t), 2)) for t, a in zip(times, solved)))
        return self.row(
            CheckReport.compare("uniqueness", ANCHOR_UNIQUENESS, worst, self.tolerance(UNIQUENESS_TOLERANCE)),
            n=count,
        )

    def defects(self) -> Iterator[CheckRow]:
        reports, gap = [], 0.0
        for phi, Y in self.cases(self.few, 6):
            transport = transport_scheme(self.ctx, phi, TransportScheme(n=DEFECT_PANELS), Y)
            for panel in defect_decomposition(self.ctx, self.fam, transport):
                reports.append(CheckReport.compare("defect-bound", ANCHOR_DEFECT, panel.defect, panel.bound))
                gap = max(gap, panel.identity_gap)
        yield self.row(self.worst(reports))
        yield self.row(CheckReport.compare("defect-identity", ANCHOR_DEFECT, gap, IDENTITY_TOLERANCE), n=len(reports))


SUITE = AdjointSuite


if __name__ == "__main__":
    raise SystemExit(SUITE.main())
