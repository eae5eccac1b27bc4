"""Ad-chain witnesses and the transport, μ-convexity and tameness certificates built on them."""

from __future__ import annotations

import json
import logging
from functools import cached_property
from typing import Iterator

import numpy as np

from src.adjoint.transport import duhamel_series
from src.approx.sequences import freeze_approximate
from src.core.curves import Curve, random_algebra_element, random_smooth_curve
from src.core.errors import PreconditionError
from src.core.reports import CheckReport
from src.estimates.bounds import (
    ANCHOR_MU_CONVEX,
    TameReport,
    mu_convexity_check,
    tame_check,
    transport_bound_check,
)
from src.estimates.witness import (
    ANCHOR_ASYMPTOTIC,
    ANCHOR_CONSTRICTED,
    apply_chain,
    asymptotic_witness,
    basis_chains,
    random_chains,
)
from src.harness.report import CheckRow

from .base import WITNESS_BALL_RADIUS, BaseSuite

logger = logging.getLogger(__name__)

BALL_FILL = 0.9
NILPOTENT_SAMPLES = 200
TAME_LEVELS = (1, 2, 4, 8, 16)
DUHAMEL_TOLERANCE = 1e-10


class EstimatesSuite(BaseSuite):
    name = "estimates"

    def ball_curve(self, rng: np.random.Generator) -> Curve:
        """Random smooth curve scaled into the witness ball."""
        phi = random_smooth_curve(self.ctx, rng)
        sup = phi.sup_norm(self.fam.get("op"))
        return phi * (BALL_FILL * WITNESS_BALL_RADIUS / sup) if sup > 0 else phi

    def checks(self) -> Iterator[CheckRow]:
        yield from self.asymptotic()
        yield self.nilpotent_chains()
        yield self.row(self.persisted_witness.as_check(), check_id="ball-witness")
        yield self.transport()
        yield self.mu_convexity()
        yield self.tame()
        yield self.persistence()
        yield self.consistency()

    def asymptotic(self) -> Iterator[CheckRow]:
        witness = asymptotic_witness(self.ctx, self.fam, "op", seed=self.seed, cfg=self.config.estimates)
        yield self.row(witness.as_check())
        # ‖[X, Y]‖ ≤ 2‖X‖·‖Y‖ caps every chain requirement below 2
        yield self.row(
            CheckReport.compare("asymptotic-multiplier", ANCHOR_ASYMPTOTIC, witness.multiplier, 2.0),
            n=witness.depth_max,
        )

    def nilpotent_chains(self) -> CheckRow:
        c = self.ctx.nilpotency_class
        if c is None:
            return self.row(
                CheckReport.skipped("nilpotent-chains", ANCHOR_CONSTRICTED, f"{self.ctx.name} declares no nilpotency class")
            )
        op = self.fam.get("op")
        worst, count = 0.0, 0
        for depth in (c, c + 1):
            chains = list(basis_chains(self.ctx, depth, op))
            chains += list(random_chains(self.ctx, self.seed, depth, NILPOTENT_SAMPLES, op))
            for Xs, Y in chains:
                worst = max(worst, float(np.max(np.abs(apply_chain(Xs, Y)))))
            count += len(chains)
        return self.row(CheckReport.compare("nilpotent-chains", ANCHOR_CONSTRICTED, worst, 0.0), n=count)

    def transport(self) -> CheckRow:
        rng = self.rng(1)
        witness = self.persisted_witness
        reports = [
            transport_bound_check(self.ctx, self.fam, witness, self.ball_curve(rng), cfg=self.stepper, seed=self.seed)
            for _ in range(self.config.suites.bound_cases)
        ]
        return self.row(self.worst(reports))

    def mu_convexity(self) -> CheckRow:
        report = mu_convexity_check(self.ctx, self.fam, "op", seed=self.seed)
        return self.row(
            CheckReport.compare(
                "mu-convexity",
                ANCHOR_MU_CONVEX,
                report.max_ratio,
                1.0,
                samples=report.samples,
                notes=[f"o={report.o_id}", f"shrinks={report.shrink_events}"],
                rtol=1e-9,
            )
        )

    @cached_property
    def tame_report(self) -> TameReport:
        phi = self.ball_curve(self.rng(2))
        sequence = [freeze_approximate(phi, n) for n in TAME_LEVELS]
        return tame_check(
            self.ctx, self.fam, sequence, "op", witness=self.persisted_witness, cfg=self.stepper, seed=self.seed
        )

    def tame(self) -> CheckRow:
        return self.row(self.tame_report.as_check())

    def persistence(self) -> CheckRow:
        """The witness file reloads field for field and matches a fresh search under the same seed byte for byte."""
        text = self.witness_path.read_text()
        again = self.search_witness()
        mismatches = sum([self.persisted_witness != again, again.model_dump_json(indent=2) != text])
        if mismatches:
            logger.warning("witness persistence: %d mismatches for %s", mismatches, self.ctx.name)
        return self.row(CheckReport.compare("witness-persistence", ANCHOR_CONSTRICTED, float(mismatches), 0.0), n=2)

    def consistency(self) -> CheckRow:
        """``C_v`` in the witness file is the constant the Duhamel truncation and the tame check ran on."""
        witness = self.persisted_witness
        if not witness.certified:
            return self.row(
                CheckReport.skipped("witness-consistency", ANCHOR_CONSTRICTED, "persisted witness is not certified")
            )
        stored = repr(json.loads(self.witness_path.read_text())["C"])
        rng = self.rng(4)
        X = random_algebra_element(self.ctx, rng, BALL_FILL * WITNESS_BALL_RADIUS)
        Y = random_algebra_element(self.ctx, rng)
        try:
            _, terms = duhamel_series(self.ctx, X, Y, 1.0, DUHAMEL_TOLERANCE, witness, self.fam)
        except PreconditionError as e:
            logger.warning("witness consistency: Duhamel series refused the persisted witness: %s", e)
            return self.row(CheckReport.compare("witness-consistency", ANCHOR_CONSTRICTED, 1.0, 0.0))
        used = {"duhamel": repr(witness.C), "tame": repr(self.tame_report.C)}
        mismatches = [name for name, value in used.items() if value != stored]
        if mismatches:
            logger.warning("witness consistency: %s differ from the stored C=%s", ", ".join(mismatches), stored)
        return self.row(
            CheckReport.compare(
                "witness-consistency", ANCHOR_CONSTRICTED, float(len(mismatches)), 0.0,
                notes=[f"C={stored}", f"duhamel terms={terms}"],
            ),
            n=len(used),
        )


SUITE = EstimatesSuite


if __name__ == "__main__":
    raise SystemExit(SUITE.main())
