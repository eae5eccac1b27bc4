"""Adjoint transport ``Y ↦ Ad_{∫_r^t φ}(Y)`` and the checks built around it."""

from __future__ import annotations

import bisect
import logging
import math
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from src.core.config import QuadratureConfig, StepperConfig
from src.core.curves import ConstantCurve, Curve, FunctionCurve, PiecewiseCurve, random_algebra_element, random_smooth_curve
from src.core.errors import ConvergenceError, InvalidArgumentError, PreconditionError
from src.core.lie import LieContext
from src.core.quadrature import integrate, seminorm_integral
from src.core.reports import CheckReport
from src.core.seminorms import SeminormFamily
from src.estimates.witness import EstimateWitness, witness_covers
from src.prodint.evolve import evolve, trajectory
from src.prodint.identities import AdjointTransportCurve

logger = logging.getLogger(__name__)

MAX_SERIES_TERMS = 1000

ANCHOR_ODE = "∂_t Ad_{∫_r^tφ}(ψ) = [φ, Ad_{∫_r^tφ}(ψ)] + Ad_{∫_r^tφ}(ψ̇)"
ANCHOR_AI = "β − β(r) = AI(φ, α)"
ANCHOR_DUHAMEL = "Ad_{exp(tX)}(Y) = Σ tᵏ/k!·ad_Xᵏ(Y)"
ANCHOR_UNIQUENESS = "α̇ = [φ, α], α(r) = Y ⇒ α = Ad_{∫_r^•φ}(Y)"
ANCHOR_INTERLEAVED = "v(ad_Z^m ∘ Ad_φ ∘ … (Y)) ≤ exp(Σ∫w(φ_p))·Π w(Z_p)^m_p·w(Y)"


def transport_exact(
    ctx: LieContext,
    curve: Curve,
    Y,
    t: float,
    cfg: Optional[StepperConfig] = None,
) -> np.ndarray:
    """``Ad_{∫_r^t φ}(Y)``: evolve, then conjugate."""
    Y = ctx.algebra_element(Y, "Y")
    if t == curve.start:
        return Y.copy()
    g = evolve(ctx, curve, curve.start, t, cfg).result
    return ctx.project(g @ Y @ ctx.inverse_unchecked(g, t=t))


def transport_curve(ctx: LieContext, curve: Curve, Y, cfg: Optional[StepperConfig] = None) -> Curve:
    """``t ↦ Ad_{∫_r^t φ}(Y)`` from one stored trajectory."""
    Y = ctx.algebra_element(Y, "Y")
    return AdjointTransportCurve(ctx, curve, ConstantCurve(Y, curve.interval), cfg)


def solve_adjoint_equation(
    ctx: LieContext,
    curve: Curve,
    Y,
    times: Sequence[float],
    rtol: float = 1e-12,
    atol: float = 1e-13,
) -> list[np.ndarray]:
    """Generic dense solve of ``α̇ = [φ, α]``, ``α(r) = Y`` (DOP853, segment by segment)."""
    Y = ctx.algebra_element(Y, "Y")
    d = ctx.dim
    times = sorted(float(t) for t in times)
    if times and (times[0] < curve.start or times[-1] > curve.end):
        raise InvalidArgumentError("requested times leave the curve interval")
    out: dict[float, np.ndarray] = {}
    state = Y.reshape(-1)
    for a, b in curve.segments():
        wanted = [t for t in times if a <= t <= b and t not in out]
        if a in wanted:
            out[a] = state.reshape(d, d).copy()

        def rhs(t, y, _left=b):
            A = y.reshape(d, d)
            P = curve.eval(min(t, _left), left=(t >= _left))
            return (P @ A - A @ P).reshape(-1)

        sol = solve_ivp(rhs, (a, b), state, method="DOP853", rtol=rtol, atol=atol, dense_output=True)
        if not sol.success:
            raise ConvergenceError(f"adjoint ODE solve failed on [{a}, {b}]: {sol.message}", last_iterate=state)
        for t in wanted:
            out[t] = sol.sol(t).reshape(d, d)
        state = sol.y[:, -1]
    return [out[t] for t in times]


def residual_AI(
    ctx: LieContext,
    curve: Curve,
    alpha: Curve,
    cfg: Optional[StepperConfig] = None,
    qcfg: Optional[QuadratureConfig] = None,
) -> Curve:
    """``t ↦ Σ ∫ Ad_{[∫_r^s φ]^{-1}}(α̇(s) - [φ(s), α(s)]) ds`` accumulated over the panels of ``α``.

    The quadrature panels follow the knots of ``α`` and ``φ`` and the steps of
    the stored trajectory, on which the integrand is smooth.
    """
    if not np.allclose(alpha.interval, curve.interval, rtol=0, atol=1e-12):
        raise InvalidArgumentError(f"α lives on {alpha.interval}, φ on {curve.interval}")
    if isinstance(alpha, PiecewiseCurve):
        for p in range(len(alpha.pieces) - 1):
            t = alpha.knot_list[p + 1]
            left, right = alpha.pieces[p].eval(t), alpha.pieces[p + 1].eval(t)
            scale = max(1.0, float(np.max(np.abs(left))))
            if np.max(np.abs(left - right)) > 1e-12 * scale:
                raise InvalidArgumentError(f"α pieces do not match at the knot t={t}")
    if alpha.order < 1:
        raise InvalidArgumentError("α must have C¹ pieces")
    traj = trajectory(ctx, curve, cfg=cfg)
    cuts = sorted(set(alpha.breakpoints) | set(curve.breakpoints) | set(traj.times[1:-1].tolist()))

    def integrand(s: float) -> np.ndarray:
        a = alpha.eval(s)
        p = curve.eval(s)
        defect = alpha.eval(s, 1) - (p @ a - a @ p)
        return traj.inverse_adjoint_at(s, defect)

    knots = alpha.knots
    cumulative = [np.zeros((ctx.dim, ctx.dim))]
    for a, b in zip(knots[:-1], knots[1:]):
        inner = [c for c in cuts if a < c < b]
        cumulative.append(cumulative[-1] + integrate(integrand, a, b, inner, qcfg).value)

    def value(t: float) -> np.ndarray:
        k = min(max(bisect.bisect_right(knots, t) - 1, 0), len(knots) - 1)
        if knots[k] == t:
            return cumulative[k].copy()
        inner = [c for c in cuts if knots[k] < c < t]
        return cumulative[k] + integrate(integrand, knots[k], t, inner, qcfg).value

    return FunctionCurve(value, curve.interval, order=0)


def scheme_residual(
    ctx: LieContext,
    curve: Curve,
    alpha: Curve,
    times: Optional[Sequence[float]] = None,
    cfg: Optional[StepperConfig] = None,
    qcfg: Optional[QuadratureConfig] = None,
) -> float:
    """``max_t ‖β(t) - β(r) - AI(φ, α)(t)‖`` for ``β = Ad_{[∫_r^• φ]^{-1}}(α)``."""
    traj = trajectory(ctx, curve, cfg=cfg)
    ai = residual_AI(ctx, curve, alpha, cfg, qcfg)
    times = np.linspace(curve.start, curve.end, 9) if times is None else times
    beta0 = alpha.eval(curve.start)
    worst = 0.0
    for t in times:
        beta = traj.inverse_adjoint_at(t, alpha.eval(t, left=True))
        gap = beta - beta0 - ai.eval(t)
        worst = max(worst, float(np.max(np.abs(gap))))
    return worst


def duhamel_series(
    ctx: LieContext,
    X,
    Y,
    t: float,
    tol: float,
    witness: Optional[EstimateWitness] = None,
    fam: Optional[SeminormFamily] = None,
) -> tuple[np.ndarray, int]:
    """``Σ_k t^k/k! · ad_X^k(Y)`` truncated once the certified tail bound drops below ``tol``.

    The tail after ``n`` terms is bounded by ``w(Y)·(|t|C)^n/n!·exp(|t|C)``
    with ``C`` and ``w`` taken from a constricted witness.
    """
    if witness is None or witness.C is None or not witness.certified:
        raise PreconditionError(
            "duhamel_series needs a certified constricted constant; "
            "run estimates.constricted_constants on a set containing X first"
        )
    fam = fam or SeminormFamily.standard()
    X = ctx.algebra_element(X, "X")
    Y = ctx.algebra_element(Y, "Y")
    if not witness_covers(witness, [X], fam):
        raise PreconditionError("X lies outside the compact set the witness was certified on")
    C = witness.C
    wY = fam.evaluate(witness.w_id, Y)
    growth = abs(t) * C
    acc = np.zeros_like(Y)
    term = Y
    for n in range(1, MAX_SERIES_TERMS + 1):
        acc = acc + term * (t ** (n - 1) / math.factorial(n - 1))
        if ctx.nilpotency_class is not None and n >= ctx.nilpotency_class:
            return ctx.project(acc), n
        tail = wY * math.exp(n * math.log(growth) - math.lgamma(n + 1) + growth) if growth > 0 else 0.0
        if tail < tol:
            return ctx.project(acc), n
        term = X @ term - term @ X
    raise ConvergenceError(f"Duhamel series did not reach {tol:g} in {MAX_SERIES_TERMS} terms", last_iterate=acc)


def adjoint_ode_defect(
    ctx: LieContext,
    curve: Curve,
    psi: Curve,
    cfg: Optional[StepperConfig] = None,
    h: float = 1e-4,
) -> Curve:
    """``t ↦ ∂_t Ad_{g(t)}(ψ(t)) - [φ(t), Ad_{g(t)}(ψ(t))] - Ad_{g(t)}(ψ̇(t))``, ``g = ∫_r^• φ``.

    The time derivative is a central difference with one Richardson pass;
    times within ``h`` of an endpoint use the nearest admissible centre.
    """
    if psi.order < 1:
        raise InvalidArgumentError("ψ must be C¹")
    traj = trajectory(ctx, curve, cfg=cfg)
    r, r1 = curve.interval
    if r1 - r <= 2 * h:
        raise InvalidArgumentError(f"interval too short for a central difference with h={h}")

    def F(t: float) -> np.ndarray:
        return traj.adjoint_at(t, psi.eval(t))

    def defect(t: float) -> np.ndarray:
        c = min(max(t, r + h), r1 - h)
        d1 = (F(c + h) - F(c - h)) / (2 * h)
        d2 = (F(c + h / 2) - F(c - h / 2)) / h
        dF = (4 * d2 - d1) / 3
        Z = F(c)
        P = curve.eval(c)
        return dF - (P @ Z - Z @ P) - traj.adjoint_at(c, psi.eval(c, 1))

    return FunctionCurve(defect, curve.interval, order=0)


def interleaved_bound_check(
    ctx: LieContext,
    fam: SeminormFamily,
    rng: np.random.Generator,
    cases: int = 200,
    v_id: str = "op",
    w_id: str = "2.0*op",
    cfg: Optional[StepperConfig] = None,
    max_blocks: int = 3,
    max_power: int = 3,
) -> CheckReport:
    """Sampled ``v(ad_{Z_1}^{m_1} Ad^{t_1}_{φ_1} ··· (Y)) ≤ exp(Σ_p ∫ w(φ_p)) · Π w(Z_p)^{m_p} · w(Y)``."""
    if cases < 1:
        raise InvalidArgumentError("interleaved_bound_check needs at least one case")
    v, w = fam.get(v_id), fam.get(w_id)
    worst = None
    for _ in range(cases):
        blocks = int(rng.integers(1, max_blocks + 1))
        Y = random_algebra_element(ctx, rng, float(rng.uniform(0.1, 1.0)))
        value = Y
        log_bound = 0.0
        factor = w(Y)
        for _ in range(blocks):
            phi = random_smooth_curve(ctx, rng, scale=float(rng.uniform(0.1, 1.0)))
            t = float(rng.uniform(0.05, 1.0))
            Z = random_algebra_element(ctx, rng, float(rng.uniform(0.1, 1.0)))
            m = int(rng.integers(0, max_power + 1))
            g = evolve(ctx, phi, 0.0, t, cfg).result
            value = g @ value @ ctx.inverse_unchecked(g)
            for _ in range(m):
                value = Z @ value - value @ Z
            log_bound += seminorm_integral(w, phi, 0.0, t)
            factor *= w(Z) ** m
        measured = v(value)
        bound = math.exp(log_bound) * factor
        report = CheckReport.compare("interleaved-bound", ANCHOR_INTERLEAVED, measured, bound)
        if worst is None or report.ratio > worst.ratio:
            worst = report
    return worst.model_copy(update={"samples": cases})
