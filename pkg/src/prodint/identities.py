"""Curves built from product integrals, and the algebraic identities they satisfy.

``AdjointTransportCurve`` carries a stored trajectory of ``φ`` and evaluates
``Ad_{(∫_r^t φ)^{±1}}(ψ(t))``; its derivatives come from Taylor jets of the
flow, so the curves built here keep exact derivatives of every order the
inputs have.
"""

from __future__ import annotations

import logging
import math
from typing import Optional, Sequence

import numpy as np

from src.core.config import StepperConfig
from src.core.curves import Curve, PiecewiseCurve, Reparametrization, SubstitutedCurve
from src.core.errors import InvalidArgumentError
from src.core.jets import cauchy_product, flow_jet, inverse_flow_jet
from src.core.lie import LieContext

from .evolve import evolve, trajectory
from .steppers import Trajectory

logger = logging.getLogger(__name__)

ANCHOR_SPLIT = "∫_r^t φ = ∫_s^t φ·∫_r^s φ"
ANCHOR_SUBSTITUTION = "∫_r^{ρ(s)} φ = [∫_ℓ^s ρ̇·(φ∘ρ)]·∫_r^{ρ(ℓ)} φ"
ANCHOR_PRODUCT = "∫φ·∫ψ = ∫(φ + Ad_{∫_r^•φ}(ψ))"
ANCHOR_INVERSE = "[∫_r^•φ]⁻¹ = ∫(−Ad_{[∫_r^•φ]⁻¹}(φ))"
ANCHOR_INVERSE_CURVE = "[∫φ]⁻¹ = ∫φ̃"


class AdjointTransportCurve(Curve):
    """``t ↦ Ad_{g(t)}(ψ(t))`` with ``g(t) = ∫_r^t φ`` (or ``g(t)^{-1}`` when ``inverse``)."""

    def __init__(
        self,
        ctx: LieContext,
        phi: Curve,
        psi: Curve,
        cfg: Optional[StepperConfig] = None,
        inverse: bool = False,
        traj: Optional[Trajectory] = None,
    ):
        if not np.allclose(phi.interval, psi.interval, rtol=0, atol=1e-12):
            raise InvalidArgumentError(
                f"transport needs a common interval, got {phi.interval} and {psi.interval}"
            )
        self.ctx = ctx
        self.phi = phi
        self.psi = psi
        self.inverse = inverse
        self.traj = traj if traj is not None else trajectory(ctx, phi, cfg=cfg)
        super().__init__(
            phi.interval,
            psi.shape,
            order=min(phi.order + 1, psi.order),
            breakpoints=sorted(set(phi.breakpoints) | set(psi.breakpoints)),
        )

    def _eval(self, t, m, left):
        g = self.traj.at(t)
        ginv = self.ctx.inverse_unchecked(g, t=t)
        if m == 0:
            Y = self.psi.eval(t, 0, left)
            return ginv @ Y @ g if self.inverse else g @ Y @ ginv
        phi_jet = self.phi.jet(t, m - 1, left)
        psi_jet = self.psi.jet(t, m, left)
        G = flow_jet(phi_jet, g, m)
        H = inverse_flow_jet(phi_jet, ginv, m)
        if self.inverse:
            coeffs = cauchy_product(cauchy_product(H, psi_jet, m), G, m)
        else:
            coeffs = cauchy_product(cauchy_product(G, psi_jet, m), H, m)
        return math.factorial(m) * coeffs[m]


def inverse_curve(phi: Curve) -> Curve:
    """``t ↦ -φ(r + r' - t)``, whose product integral is ``[∫φ]^{-1}``."""
    return SubstitutedCurve(phi, Reparametrization.reversal(phi.interval))


def combine_product(
    ctx: LieContext,
    phi: Curve,
    psi: Curve,
    cfg: Optional[StepperConfig] = None,
) -> Curve:
    """``t ↦ φ(t) + Ad_{∫_r^t φ}(ψ(t))``; integrates to ``∫φ · ∫ψ``."""
    return phi + AdjointTransportCurve(ctx, phi, psi, cfg)


def combine_inverse(ctx: LieContext, phi: Curve, cfg: Optional[StepperConfig] = None) -> Curve:
    """``t ↦ -Ad_{[∫_r^t φ]^{-1}}(φ(t))``; integrates to ``[∫_r^t φ]^{-1}``."""
    return -AdjointTransportCurve(ctx, phi, phi, cfg, inverse=True)


def _check_partition(curve: Curve, partition: Sequence[float]) -> list[float]:
    pts = [float(p) for p in partition]
    if len(pts) < 2:
        raise InvalidArgumentError("a partition needs at least two points")
    if any(b <= a for a, b in zip(pts[:-1], pts[1:])):
        raise InvalidArgumentError(f"partition must be strictly increasing: {pts}")
    r, r1 = curve.interval
    tol = 1e-12 * max(1.0, abs(r), abs(r1))
    if pts[0] < r - tol or pts[-1] > r1 + tol:
        raise InvalidArgumentError(f"partition {pts} leaves curve interval [{r}, {r1}]")
    return pts


def split_evolve(
    ctx: LieContext,
    phi: Curve,
    partition: Sequence[float],
    cfg: Optional[StepperConfig] = None,
) -> np.ndarray:
    """``∫_{t_{n-1}}^{t_n} φ ··· ∫_{t_0}^{t_1} φ``."""
    pts = _check_partition(phi, partition)
    acc = np.eye(ctx.dim)
    for a, b in zip(pts[:-1], pts[1:]):
        acc = evolve(ctx, phi, a, b, cfg).result @ acc
    return acc


def substitute(ctx: LieContext, phi: Curve, rho: Reparametrization) -> Curve:
    """``s ↦ ρ̇(s)·φ(ρ(s))``."""
    if phi.shape != (ctx.dim, ctx.dim):
        raise InvalidArgumentError(f"curve of shape {phi.shape} in a dim={ctx.dim} context")
    return SubstitutedCurve(phi, rho)


def substitution_gap(
    ctx: LieContext,
    phi: Curve,
    rho: Reparametrization,
    s: float,
    cfg: Optional[StepperConfig] = None,
) -> float:
    """``‖∫_r^{ρ(s)} φ - [∫_ℓ^s ρ̇·(φ∘ρ)]·[∫_r^{ρ(ℓ)} φ]‖`` in operator norm."""
    sub = substitute(ctx, phi, rho)
    ell = rho.domain[0]
    r = phi.start
    lhs = evolve(ctx, phi, r, rho(s), cfg).result
    rhs = evolve(ctx, sub, ell, s, cfg).result @ evolve(ctx, phi, r, rho(ell), cfg).result
    return float(np.linalg.norm(lhs - rhs, 2))


def evolve_piecewise(
    ctx: LieContext,
    phi: PiecewiseCurve,
    t: Optional[float] = None,
    cfg: Optional[StepperConfig] = None,
) -> np.ndarray:
    """``∫_{t_p}^t φ[p] ··· ∫_r^{t_1} φ[0]``, each factor from its own piece.

    Each knot interval gets a share of ``cfg.steps`` proportional to its
    length, so refinements at grid-aligned knots reproduce the same steps.
    """
    cfg = cfg or StepperConfig()
    t = phi.end if t is None else float(t)
    r = phi.start
    if t < r or t > phi.end + 1e-12 * max(1.0, abs(phi.end)):
        raise InvalidArgumentError(f"t={t} not covered by pieces on [{r}, {phi.end}]")
    acc = np.eye(ctx.dim)
    if t == r:
        return acc
    knots = phi.knot_list
    for piece, a, b in zip(phi.pieces, knots[:-1], knots[1:]):
        if a >= t:
            break
        b = min(b, t)
        steps = max(1, round(cfg.steps * (b - a) / (t - r)))
        acc = evolve(ctx, piece, a, b, cfg.with_steps(steps)).result @ acc
    return acc
