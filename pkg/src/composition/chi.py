"""Collapsing ordered products of product integrals into one curve.

For a stack ``φ_1, …, φ_n`` (listed in application order) the curve

    χ = φ_n + Ad_{∫φ_n}(φ_{n-1}) + Ad_{∫φ_n}Ad_{∫φ_{n-1}}(φ_{n-2}) + …

satisfies ``∫χ = ∫φ_n ··· ∫φ_1``. It is folded bottom-up as
``S_1 = φ_1``, ``S_{p+1} = φ_{p+1} + Ad_{∫φ_{p+1}}(S_p)``, one Taylor jet per
stack member, so derivatives of order ``k`` cost ``O(n·k²)`` products.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from src.core.config import StepperConfig
from src.core.curves import Curve, PolynomialCurve, Reparametrization, SubstitutedCurve, random_algebra_element
from src.core.errors import InvalidArgumentError, PreconditionError
from src.core.jets import Jet, conjugate_jet, flow_jet, inverse_flow_jet
from src.core.lie import LieContext
from src.core.reports import CheckReport
from src.core.seminorms import SeminormFamily
from src.estimates.witness import EstimateWitness
from src.prodint.evolve import trajectory

logger = logging.getLogger(__name__)

ANCHOR_COLLAPSE = "∫χ_n·…·∫χ₁ = ∫φ_n·…·∫φ₁ = ∫χ"
ANCHOR_TERM_COUNT = "at most n·(n+1)·…·(n+k) terms"
ANCHOR_FACTORIAL = "v^q_∞(χ) ≤ e·(n+1)·…·(n+q)/n^q"

PRECONDITION_RTOL = 1e-9


@dataclass(frozen=True)
class CurveStack:
    """Curves on a common interval, in application order."""

    curves: tuple[Curve, ...]

    def __post_init__(self):
        if not self.curves:
            raise InvalidArgumentError("a curve stack needs at least one curve")
        first = self.curves[0]
        for i, c in enumerate(self.curves[1:], start=2):
            if not np.allclose(c.interval, first.interval, rtol=0, atol=1e-12):
                raise InvalidArgumentError(f"stack member {i} lives on {c.interval}, member 1 on {first.interval}")
            if c.shape != first.shape:
                raise InvalidArgumentError(f"stack member {i} has shape {c.shape}, member 1 {first.shape}")

    @classmethod
    def of(cls, curves: Sequence[Curve]) -> "CurveStack":
        return cls(tuple(curves))

    def __len__(self) -> int:
        return len(self.curves)

    def __iter__(self):
        return iter(self.curves)

    def __getitem__(self, i: int) -> Curve:
        return self.curves[i]

    @property
    def interval(self) -> tuple[float, float]:
        return self.curves[0].interval

    @property
    def order(self):
        return min(c.order for c in self.curves)

    def sup_norm(self, norm, order: int = 0, n: int = 65) -> float:
        """``max_p norm^order_∞(φ_p)``."""
        return max(c.sup_norm(norm, order, n) for c in self.curves)


class ChiCurve(Curve):
    """``χ{φ_1, …, φ_n}`` with exact derivatives through the stack's order."""

    def __init__(self, ctx: LieContext, stack: CurveStack, cfg: Optional[StepperConfig] = None):
        self.ctx = ctx
        self.stack = stack
        # φ_1 is never transported, so its flow is not needed.
        self.trajs = [None] + [trajectory(ctx, c, cfg=cfg) for c in stack.curves[1:]]
        breaks = sorted({b for c in stack.curves for b in c.breakpoints})
        super().__init__(stack.interval, stack[0].shape, order=stack.order, breakpoints=breaks)

    def jet(self, t: float, n: int, left: bool = False) -> Jet:
        if n > self.order:
            raise InvalidArgumentError(f"derivative order {n} exceeds curve order {self.order}")
        t = self._clamp(float(t))
        S = self.stack[0].jet(t, n, left)
        for phi, traj in zip(self.stack.curves[1:], self.trajs[1:]):
            g = traj.at(t)
            ginv = self.ctx.inverse_unchecked(g, t=t)
            phi_jet = phi.jet(t, n, left)
            G = flow_jet(phi_jet, g, n)
            H = inverse_flow_jet(phi_jet, ginv, n)
            moved = conjugate_jet(G, S, H, n)
            S = [a + b for a, b in zip(phi_jet, moved)]
        return S

    def _eval(self, t, m, left):
        return math.factorial(m) * self.jet(t, m, left)[m]

    def __repr__(self):
        return f"ChiCurve(n={len(self.stack)}, interval={self.interval})"


def chi_compose(ctx: LieContext, stack: CurveStack | Sequence[Curve], cfg: Optional[StepperConfig] = None) -> Curve:
    """The single curve integrating to ``∫φ_n ··· ∫φ_1``; a one-curve stack is returned as is."""
    stack = stack if isinstance(stack, CurveStack) else CurveStack.of(stack)
    if stack[0].shape != (ctx.dim, ctx.dim):
        raise InvalidArgumentError(f"stack of shape {stack[0].shape} in a dim={ctx.dim} context")
    if len(stack) == 1:
        return stack[0]
    return ChiCurve(ctx, stack, cfg)


def _require_interval(stack: CurveStack, length: float):
    a, b = stack.interval
    if abs(a) > 1e-12 or abs(b - length) > 1e-12 * max(1.0, length):
        raise InvalidArgumentError(f"expected a stack on [0, {length:g}], got [{a}, {b}]")


def rescale_stack(ctx: LieContext, stack: CurveStack) -> CurveStack:
    """``χ_1, …, χ_n`` on ``[0, 1/n]`` ↦ ``φ_p(t) = 1/n·χ_p(t/n)`` on ``[0, 1]``."""
    n = len(stack)
    _require_interval(stack, 1.0 / n)
    if stack[0].shape != (ctx.dim, ctx.dim):
        raise InvalidArgumentError(f"stack of shape {stack[0].shape} in a dim={ctx.dim} context")
    rho = Reparametrization.affine(1.0 / n, 0.0, (0.0, 1.0))
    return CurveStack.of([SubstitutedCurve(c, rho) for c in stack])


def refine_stack(stack: CurveStack, q: int) -> CurveStack:
    """``ψ_1, …, ψ_m`` on ``[0, 1/m]`` ↦ ``χ_{pq+ℓ}(t) = ψ_p(ℓ/(qm) + t)`` on ``[0, 1/(qm)]``."""
    if q < 1:
        raise InvalidArgumentError(f"refinement factor must be positive, got {q}")
    m = len(stack)
    _require_interval(stack, 1.0 / m)
    width = 1.0 / (q * m)
    out = []
    for psi in stack:
        for ell in range(q):
            rho = Reparametrization.affine(1.0, ell * width, (0.0, width))
            out.append(SubstitutedCurve(psi, rho))
    return CurveStack.of(out)


def term_count(n: int, k: int) -> int:
    """``n·(n+1)·…·(n+k)``."""
    if n < 1:
        raise InvalidArgumentError(f"term_count needs n >= 1, got {n}")
    if k < 0:
        raise InvalidArgumentError(f"term_count needs k >= 0, got {k}")
    return math.prod(range(n, n + k + 1))


def factorial_bound(n: int, q: int, scale: float = 1.0) -> float:
    """``e^λ·max(λ, λ^{q+1})·(n+1)···(n+q)/n^q``; ``λ = 1`` gives ``e·(n+1)···(n+q)/n^q``.

    The product is empty for ``q = 0``, so the bound is ``e`` for every ``n``.
    """
    if n < 1 or q < 0:
        raise InvalidArgumentError(f"bound needs n >= 1 and q >= 0, got n={n}, q={q}")
    if scale < 0:
        raise InvalidArgumentError(f"scale must be non-negative, got {scale}")
    ratio = math.prod((n + i) / n for i in range(1, q + 1))
    return math.exp(scale) * max(scale, scale ** (q + 1)) * ratio


def polynomial_derivative_bound(norms: Sequence[float], k: int, width: float) -> float:
    """Bound on ``sup_{[0, width]} ‖d^k/dt^k Σ_j C_j t^j‖`` from ``norms[j] = ‖C_j‖``."""
    return sum(
        math.factorial(j) / math.factorial(j - k) * norms[j] * width ** (j - k)
        for j in range(k, len(norms))
    )


def random_unit_stack(
    ctx: LieContext,
    fam: SeminormFamily,
    w_id: str,
    n: int,
    q: int,
    rng: np.random.Generator,
    degree: int = 3,
) -> CurveStack:
    """``n`` random polynomials on ``[0, 1/n]`` normalised to ``w^q_∞ ≤ 1``."""
    w = fam.get(w_id)
    width = 1.0 / n
    curves = []
    for _ in range(n):
        coeffs = [random_algebra_element(ctx, rng, float(rng.uniform(0.2, 1.0))) for _ in range(degree + 1)]
        norms = [w(C) for C in coeffs]
        bound = max(polynomial_derivative_bound(norms, k, width) for k in range(q + 1))
        curves.append(PolynomialCurve([C / bound for C in coeffs], (0.0, width), center=0.0))
    return CurveStack.of(curves)


def chi_sup_bound_check(
    ctx: LieContext,
    fam: SeminormFamily,
    witness: EstimateWitness,
    stack: CurveStack,
    q: int,
    cfg: Optional[StepperConfig] = None,
    samples: int = 65,
) -> CheckReport:
    """``v^q_∞(χ) ≤ e·(n+1)···(n+q)/n^q`` for a stack ``χ_1, …, χ_n`` on ``[0, 1/n]`` with ``w^q_∞ ≤ 1``.

    ``χ`` here is the collapse of the rescaled stack; a stack violating the
    unit precondition is reported as skipped.
    """
    if q < 0:
        raise InvalidArgumentError(f"derivative order must be non-negative, got {q}")
    if q > stack.order:
        raise InvalidArgumentError(f"stack only carries derivatives through order {stack.order}, asked for {q}")
    if witness.kind != "asymptotic" or not witness.certified:
        raise PreconditionError("the factorial bound needs a certified asymptotic witness (v, w)")
    n = len(stack)
    w_sup = stack.sup_norm(fam.get(witness.w_id), q, samples)
    if w_sup > 1.0 + PRECONDITION_RTOL:
        logger.warning("factorial bound skipped: stack w-sup-norm %.6g exceeds 1", w_sup)
        return CheckReport.skipped(
            "factorial-bound",
            ANCHOR_FACTORIAL,
            f"precondition w^q_∞ ≤ 1 violated (stack sup {w_sup:.6g})",
        )
    chi = chi_compose(ctx, rescale_stack(ctx, stack), cfg)
    measured = chi.sup_norm(fam.get(witness.v_id), q, samples)
    report = CheckReport.compare(
        "factorial-bound",
        ANCHOR_FACTORIAL,
        measured,
        factorial_bound(n, q),
        samples=samples * (q + 1),
        notes=[f"n={n}", f"q={q}"],
    )
    if not report.passed:
        logger.warning("factorial bound violated at n=%d, q=%d: ratio %.6g", n, q, report.ratio)
    return report
