"""Transport, μ-convexity and tameness certificates.

Every check here returns a report; a failed inequality is data, never an
exception. Only missing certificates (an uncertified witness, or one that
does not cover the curve) raise ``PreconditionError``.
"""

from __future__ import annotations

import logging
import math
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel

from src.core.config import StepperConfig
from src.core.curves import Curve, random_algebra_element
from src.core.errors import ChartDomainError, InvalidArgumentError, PreconditionError
from src.core.lie import LieContext, chart
from src.core.reports import CheckReport
from src.core.seminorms import SeminormFamily
from src.prodint.evolve import trajectory

from .witness import EstimateWitness, image_nodes, pair_elements, random_unit, unit_basis, witness_covers

logger = logging.getLogger(__name__)

ANCHOR_TRANSPORT = "v∘Ad_{φ⁻¹} ≤ exp(|r′−r|·C_v)·w"
ANCHOR_MU_CONVEX = "(u∘Ξ)(Ξ⁻¹(X₁)·…·Ξ⁻¹(X_n)) ≤ o(X₁)+…+o(X_n)"
ANCHOR_TAME = "v∘Ad_{[∫_r^•φ_n]⁻¹} ≤ w for all n"

GRID_RTOL = 1e-12
MAX_SHRINKS = 30


def _require_constricted(witness: EstimateWitness) -> float:
    if witness.kind != "constricted" or not witness.certified or witness.C is None:
        raise PreconditionError("transport bounds need a certified constricted witness")
    return witness.C


def _transport_samples(ctx: LieContext, fam: SeminormFamily, w_id: str, seed: int, count: int) -> list[np.ndarray]:
    w = fam.get(w_id)
    rng = np.random.default_rng([seed, 1])
    return unit_basis(ctx, w) + [random_unit(ctx, rng, w) for _ in range(count)]


def transport_bound_check(
    ctx: LieContext,
    fam: SeminormFamily,
    witness: EstimateWitness,
    curve: Curve,
    Ys: Optional[Sequence[np.ndarray]] = None,
    times: Optional[Sequence[float]] = None,
    cfg: Optional[StepperConfig] = None,
    seed: int = 0,
) -> CheckReport:
    """Sampled ``v(Ad_{[∫_r^t φ]^{-1}}(Y)) ≤ exp(|r′−r|·C_v)·w(Y)``."""
    C = _require_constricted(witness)
    if not witness_covers(witness, image_nodes(curve), fam):
        raise PreconditionError(
            f"witness for {witness.context}/{witness.v_id} does not cover the sampled image of the curve"
        )
    v, w = fam.get(witness.v_id), fam.get(witness.w_id)
    if Ys is None:
        Ys = _transport_samples(ctx, fam, witness.w_id, seed, 8)
    Ys = [ctx.algebra_element(Y, "Y") for Y in Ys]
    times = curve.sample_times(17) if times is None else times
    factor = math.exp(curve.length * C)
    traj = trajectory(ctx, curve, cfg=cfg)

    worst: Optional[CheckReport] = None
    count = 0
    for t in times:
        for Y in Ys:
            wy = w(Y)
            if wy == 0.0:
                continue
            count += 1
            report = CheckReport.compare("transport-bound", ANCHOR_TRANSPORT, v(traj.inverse_adjoint_at(t, Y)), factor * wy)
            if worst is None or report.ratio > worst.ratio:
                worst = report
    if worst is None:
        return CheckReport.skipped("transport-bound", ANCHOR_TRANSPORT, "no Y with w(Y) > 0")
    if not worst.passed:
        logger.warning("transport bound violated: ratio %.6g", worst.ratio)
    return worst.model_copy(update={"samples": count})


# -- local μ-convexity --------------------------------------------------------


class MuConvexityReport(BaseModel):
    u_id: str
    o_id: str
    multiplier: float
    certified: bool
    word_lengths: list[int]
    samples: int
    max_ratio: float
    per_length: dict[int, float]
    shrink_events: int = 0
    seed: int = 0


def _word(ctx: LieContext, Zs: Sequence[np.ndarray], tau: float) -> list[np.ndarray]:
    return [ctx.exp_unchecked(tau * Z) - np.eye(ctx.dim) for Z in Zs]


def _scale_to(ctx: LieContext, u, Zs: Sequence[np.ndarray], target: float) -> tuple[float, list[np.ndarray], float]:
    """Fixed-point search for ``τ`` with ``Σ u(Ξ(exp(τ Z_i))) = target``."""
    first = sum(u(Z) for Z in Zs)
    tau = target / first
    for _ in range(30):
        Xs = _word(ctx, Zs, tau)
        total = sum(u(X) for X in Xs)
        if total == 0.0 or abs(total - target) <= 1e-10 * target:
            break
        tau *= target / total
    Xs = _word(ctx, Zs, tau)
    total = sum(u(X) for X in Xs)
    if total > target:
        shrink = target / total
        tau *= shrink
        Xs = _word(ctx, Zs, tau)
        total = sum(u(X) for X in Xs)
    return tau, Xs, total


def _word_ratio(
    ctx: LieContext,
    u,
    Zs: Sequence[np.ndarray],
    target: float,
    c: float,
) -> tuple[Optional[float], int]:
    """``u(Ξ(product)) / (c·Σ u(X_i))`` for one word, halving the word until the product stays in the chart."""
    shrinks = 0
    while shrinks <= MAX_SHRINKS:
        _, Xs, total = _scale_to(ctx, u, Zs, target)
        if total == 0.0:
            return None, shrinks
        g = np.eye(ctx.dim)
        for X in Xs:
            g = (np.eye(ctx.dim) + X) @ g
        try:
            x = chart(ctx, g)
        except ChartDomainError:
            shrinks += 1
            target *= 0.5
            continue
        return u(x) / (c * total), shrinks
    return None, shrinks


def mu_convexity_check(
    ctx: LieContext,
    fam: SeminormFamily,
    u_id: str,
    word_lengths: Sequence[int] = (1, 2, 4, 8, 16, 32),
    budget_samples: int = 200,
    seed: int = 0,
    grid_max_exponent: int = 10,
) -> MuConvexityReport:
    """Smallest ``c ∈ {1, 2, 4, …}`` such that ``o = c·u`` passes every sampled word.

    Words are ``X_i = Ξ(exp(τ·Z_i))`` with Dirichlet weights on the ``Z_i``,
    scaled so that ``Σ o(X_i)`` hits a random level in ``(0, 1]``; a quarter
    of each batch uses one common direction (with random signs for half of
    those), which are the words that make ``c = 1`` fail in commuting
    directions. Products leaving the chart are halved and counted as shrink
    events.
    """
    if not word_lengths or min(word_lengths) < 1:
        raise InvalidArgumentError("word lengths must be positive")
    if budget_samples < 1:
        raise InvalidArgumentError("budget_samples must be positive")
    u = fam.get(u_id)
    lengths = sorted(set(int(n) for n in word_lengths))
    aligned = max(1, budget_samples // 4)

    last: Optional[MuConvexityReport] = None
    for k in range(grid_max_exponent + 1):
        c = 2.0**k
        per_length: dict[int, float] = {}
        shrinks = 0
        for n in lengths:
            rng = np.random.default_rng([seed, n])
            worst = 0.0
            for i in range(budget_samples):
                level = float(rng.uniform(0.05, 1.0))
                weights = rng.dirichlet(np.ones(n))
                if i < aligned:
                    D = random_algebra_element(ctx, rng)
                    signs = rng.choice([-1.0, 1.0], size=n) if i % 2 else np.ones(n)
                    Zs = [s * wgt * D for s, wgt in zip(signs, weights)]
                else:
                    Zs = [wgt * random_algebra_element(ctx, rng) for wgt in weights]
                if not any(np.any(Z) for Z in Zs):
                    continue
                ratio, used = _word_ratio(ctx, u, Zs, level / c, c)
                if used:
                    shrinks += used
                    logger.warning("μ-convexity: word of length %d shrunk %d times to stay in the chart", n, used)
                if ratio is not None:
                    worst = max(worst, ratio)
            per_length[n] = worst
        max_ratio = max(per_length.values(), default=0.0)
        certified = max_ratio <= 1.0 + GRID_RTOL
        logger.debug("μ-convexity %s/%s: c=%g gives max ratio %.6g", ctx.name, u_id, c, max_ratio)
        last = MuConvexityReport(
            u_id=u_id,
            o_id=fam.scaled(u_id, c),
            multiplier=c,
            certified=certified,
            word_lengths=lengths,
            samples=budget_samples * len(lengths),
            max_ratio=max_ratio,
            per_length=per_length,
            shrink_events=shrinks,
            seed=seed,
        )
        if certified:
            logger.info("μ-convexity for %s/%s certified at c=%g", ctx.name, u_id, c)
            return last
    logger.warning("μ-convexity for %s/%s: no c <= 2^%d certifies", ctx.name, u_id, grid_max_exponent)
    return last


# -- tame sequences -------------------------------------------------------------


class TameReport(BaseModel):
    v_id: str
    w_id: str
    multiplier: float
    certified: bool
    ratios: list[float]
    max_ratio: float
    C: Optional[float] = None
    transport_constant: Optional[float] = None
    witness_ratio: Optional[float] = None
    within_transport_constant: Optional[bool] = None
    notes: list[str] = []

    def as_check(self) -> CheckReport:
        if self.transport_constant is not None and self.witness_ratio is not None:
            return CheckReport.compare(
                "tame-sequence", ANCHOR_TAME, self.witness_ratio, self.transport_constant, samples=len(self.ratios)
            )
        return CheckReport.compare(
            "tame-sequence", ANCHOR_TAME, self.max_ratio, self.multiplier if self.certified else 0.0, samples=len(self.ratios)
        )


def tame_check(
    ctx: LieContext,
    fam: SeminormFamily,
    curves: Sequence[Curve],
    v_id: str,
    witness: Optional[EstimateWitness] = None,
    cfg: Optional[StepperConfig] = None,
    times: int = 9,
    y_count: int = 8,
    seed: int = 0,
    grid_max_exponent: int = 20,
) -> TameReport:
    """One multiple ``w = c·v`` bounding ``v∘Ad_{[∫_r^t φ_n]^{-1}}`` for every curve of the sequence.

    With a constricted witness covering the sequence, the ratios against the
    witness's ``w`` are also compared with ``exp(L·C_v)``, ``L`` the longest
    interval.
    """
    if not curves:
        raise InvalidArgumentError("tame_check needs at least one curve")
    v = fam.get(v_id)
    Ys = [Y for Y in _transport_samples(ctx, fam, v_id, seed, y_count) if v(Y) > 0]
    Ys += pair_elements(ctx, v)
    w_wit = fam.get(witness.w_id) if witness is not None else None

    ratios: list[float] = []
    witness_ratio = 0.0
    for curve in curves:
        traj = trajectory(ctx, curve, cfg=cfg)
        worst = 0.0
        for t in np.linspace(curve.start, curve.end, times):
            for Y in Ys:
                lhs = v(traj.inverse_adjoint_at(t, Y))
                worst = max(worst, lhs / v(Y))
                if w_wit is not None:
                    witness_ratio = max(witness_ratio, lhs / w_wit(Y))
        ratios.append(worst)
    max_ratio = max(ratios)

    multiplier = None
    for k in range(grid_max_exponent + 1):
        if 2.0**k * (1.0 + GRID_RTOL) >= max_ratio:
            multiplier = 2.0**k
            break
    certified = multiplier is not None
    multiplier = multiplier if certified else 2.0**grid_max_exponent

    notes: list[str] = []
    C = transport_constant = within = None
    if witness is not None:
        C = _require_constricted(witness)
        covered = all(witness_covers(witness, image_nodes(c), fam) for c in curves)
        if covered:
            transport_constant = math.exp(max(c.length for c in curves) * C)
            within = witness_ratio <= transport_constant * (1.0 + GRID_RTOL)
        else:
            notes.append("witness does not cover every curve image; transport constant not compared")
            logger.warning("tame_check: witness does not cover the sequence")

    if not certified:
        logger.warning("tame_check: ratios grow past 2^%d (max %.6g)", grid_max_exponent, max_ratio)
    return TameReport(
        v_id=v_id,
        w_id=fam.scaled(v_id, multiplier),
        multiplier=multiplier,
        certified=certified,
        ratios=ratios,
        max_ratio=max_ratio,
        transport_constant=transport_constant,
        witness_ratio=witness_ratio if witness is not None else None,
        within_transport_constant=within,
        C=C,
        notes=notes,
    )
