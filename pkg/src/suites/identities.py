"""Product-integral identities: splitting, substitution, products and inverses."""

from __future__ import annotations

import logging
from typing import Iterator

import numpy as np

from src.core.curves import Curve, Reparametrization, random_polynomial_curve, random_smooth_curve
from src.core.reports import CheckReport
from src.harness.report import CheckRow
from src.prodint.evolve import evolve
from src.prodint.identities import (
    ANCHOR_INVERSE,
    ANCHOR_INVERSE_CURVE,
    ANCHOR_PRODUCT,
    ANCHOR_SPLIT,
    ANCHOR_SUBSTITUTION,
    combine_inverse,
    combine_product,
    inverse_curve,
    split_evolve,
    substitution_gap,
)

from .base import BaseSuite

logger = logging.getLogger(__name__)


def relative_gap(a: np.ndarray, b: np.ndarray) -> float:
    scale = float(np.linalg.norm(a, 2))
    return float(np.linalg.norm(a - b, 2)) / scale if scale > 0 else float(np.linalg.norm(b, 2))


class IdentitiesSuite(BaseSuite):
    """Each identity over the configured number of random curves, worst relative error per row.

    Unitriangular contexts use linear curves, on which the fourth-order
    commutator-free stepper is exact; the identities whose curves stay linear
    are then held to the exact tolerance.
    """

    name = "identities"

    @property
    def exact(self) -> bool:
        return self.ctx.nilpotent_matrices and self.precise.method == "commutator-free-4"

    def curves(self) -> list[Curve]:
        rng = self.rng(0)
        count = self.config.suites.curves
        if self.ctx.nilpotent_matrices:
            return [random_polynomial_curve(self.ctx, rng, degree=1) for _ in range(count)]
        return [random_smooth_curve(self.ctx, rng) for _ in range(count)]

    def _tolerances(self) -> tuple[float, float]:
        suites = self.config.suites
        loose = self.tolerance(suites.identity_tolerance)
        tight = self.tolerance(suites.exact_tolerance) if self.exact else loose
        return tight, loose

    def checks(self) -> Iterator[CheckRow]:
        ctx, cfg = self.ctx, self.precise
        curves = self.curves()
        tight, loose = self._tolerances()
        rng = self.rng(1)

        split = []
        for phi in curves:
            cut = float(rng.uniform(0.2, 0.8))
            whole = evolve(ctx, phi, cfg=cfg).result
            split.append(relative_gap(whole, split_evolve(ctx, phi, [phi.start, cut, phi.end], cfg)))
        yield self.row(CheckReport.compare("split", ANCHOR_SPLIT, max(split), tight), n=len(curves))

        affine = []
        for phi in curves:
            slope = float(rng.uniform(0.3, 0.7))
            rho = Reparametrization.affine(slope, float(rng.uniform(0.0, 1.0 - slope)), (0.0, 1.0))
            scale = float(np.linalg.norm(evolve(ctx, phi, phi.start, rho(1.0), cfg).result, 2))
            affine.append(substitution_gap(ctx, phi, rho, 1.0, cfg) / scale)
        yield self.row(CheckReport.compare("substitution", ANCHOR_SUBSTITUTION, max(affine), tight), n=len(curves))

        square = Reparametrization(lambda s: s * s, lambda s: 2.0 * s, (0.0, 1.0))
        bent = []
        for phi in curves:
            scale = float(np.linalg.norm(evolve(ctx, phi, cfg=cfg).result, 2))
            bent.append(substitution_gap(ctx, phi, square, 1.0, cfg) / scale)
        yield self.row(
            CheckReport.compare("substitution-nonlinear", ANCHOR_SUBSTITUTION, max(bent), loose), n=len(curves)
        )

        product = []
        for phi, psi in zip(curves, curves[1:] + curves[:1]):
            lhs = evolve(ctx, phi, cfg=cfg).result @ evolve(ctx, psi, cfg=cfg).result
            product.append(relative_gap(lhs, evolve(ctx, combine_product(ctx, phi, psi, cfg), cfg=cfg).result))
        yield self.row(CheckReport.compare("product", ANCHOR_PRODUCT, max(product), loose), n=len(curves))

        inverse, reversed_ = [], []
        for phi in curves:
            inv = ctx.inverse_unchecked(evolve(ctx, phi, cfg=cfg).result)
            inverse.append(relative_gap(inv, evolve(ctx, combine_inverse(ctx, phi, cfg), cfg=cfg).result))
            reversed_.append(relative_gap(inv, evolve(ctx, inverse_curve(phi), cfg=cfg).result))
        yield self.row(CheckReport.compare("inverse", ANCHOR_INVERSE, max(inverse), loose), n=len(curves))
        yield self.row(
            CheckReport.compare("inverse-curve", ANCHOR_INVERSE_CURVE, max(reversed_), tight), n=len(curves)
        )


SUITE = IdentitiesSuite


if __name__ == "__main__":
    raise SystemExit(SUITE.main())
