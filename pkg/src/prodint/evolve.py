"""The evolution map ``∫_s^t φ`` and the right logarithmic derivative."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from src.core.config import StepperConfig
from src.core.curves import Curve, FunctionCurve
from src.core.errors import ConvergenceError, InvalidArgumentError, SingularElementError
from src.core.lie import LieContext

from .steppers import Trajectory, get_stepper

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvolveReport:
    result: np.ndarray
    steps_used: int
    defect: float
    method: str
    error_estimate: Optional[float] = None
    oracle_gap: Optional[float] = None
    trajectory: Optional[Trajectory] = field(default=None, repr=False, compare=False)


def _check_call(ctx: LieContext, curve: Curve, s: float, t: float):
    if curve.shape != (ctx.dim, ctx.dim):
        raise InvalidArgumentError(f"curve of shape {curve.shape} in a dim={ctx.dim} context")
    r, r1 = curve.interval
    tol = 1e-12 * max(1.0, abs(r), abs(r1))
    if s < r - tol or t > r1 + tol:
        raise InvalidArgumentError(f"[{s}, {t}] is not contained in the curve interval [{r}, {r1}]")
    if t < s:
        raise InvalidArgumentError(f"evolve needs s <= t, got s={s}, t={t}")
    ctx.algebra_element(curve.eval(s), "φ(s)")


def trajectory(
    ctx: LieContext,
    curve: Curve,
    s: Optional[float] = None,
    t: Optional[float] = None,
    cfg: Optional[StepperConfig] = None,
) -> Trajectory:
    """Dense trajectory ``u ↦ ∫_s^u φ`` on ``[s, t]`` (fixed steps, no adaptivity)."""
    cfg = cfg or StepperConfig()
    s = curve.start if s is None else float(s)
    t = curve.end if t is None else float(t)
    _check_call(ctx, curve, s, t)
    if s == t:
        raise InvalidArgumentError("a trajectory needs a non-degenerate interval")
    return Trajectory.compute(ctx, curve, s, t, cfg.steps, cfg.method)


def reference_evolve(
    ctx: LieContext,
    curve: Curve,
    s: Optional[float] = None,
    t: Optional[float] = None,
    steps: int = 64,
) -> np.ndarray:
    """Dense classical 4-stage integration of ``μ̇ = φμ`` at 16× ``steps``."""
    s = curve.start if s is None else float(s)
    t = curve.end if t is None else float(t)
    _check_call(ctx, curve, s, t)
    if s == t:
        return np.eye(ctx.dim)
    return Trajectory.compute(ctx, curve, s, t, steps, "reference-dense-RK").result


def evolve(
    ctx: LieContext,
    curve: Curve,
    s: Optional[float] = None,
    t: Optional[float] = None,
    cfg: Optional[StepperConfig] = None,
) -> EvolveReport:
    """Product integral ``∫_s^t φ``: the value at ``t`` of ``μ̇ = φ(t)·μ``, ``μ(s) = 1``."""
    cfg = cfg or StepperConfig()
    s = curve.start if s is None else float(s)
    t = curve.end if t is None else float(t)
    _check_call(ctx, curve, s, t)
    if s == t:
        return EvolveReport(result=np.eye(ctx.dim), steps_used=0, defect=0.0, method=cfg.method)

    if cfg.adaptive:
        traj, error = _adaptive(ctx, curve, s, t, cfg)
    else:
        traj, error = Trajectory.compute(ctx, curve, s, t, cfg.steps, cfg.method), None

    defect = traj.defect() if cfg.compute_defect else 0.0
    gap = None
    if cfg.oracle:
        ref = reference_evolve(ctx, curve, s, t, steps=traj.steps)
        gap = float(np.linalg.norm(traj.result - ref, 2))
    if not ctx.is_member(traj.result):
        logger.warning("evolve result on [%g, %g] violates %s membership", s, t, ctx.membership.value)
    return EvolveReport(
        result=traj.result.copy(),
        steps_used=traj.steps,
        defect=defect,
        method=cfg.method,
        error_estimate=error,
        oracle_gap=gap,
        trajectory=traj,
    )


def _adaptive(ctx: LieContext, curve: Curve, s: float, t: float, cfg: StepperConfig) -> tuple[Trajectory, float]:
    order = get_stepper(cfg.method).order
    steps = cfg.steps
    coarse = Trajectory.compute(ctx, curve, s, t, steps, cfg.method)
    for halving in range(cfg.max_halvings):
        steps *= 2
        fine = Trajectory.compute(ctx, curve, s, t, steps, cfg.method)
        diff = float(np.linalg.norm(fine.result - coarse.result, 2))
        estimate = diff / (2**order - 1)
        logger.debug("adaptive evolve: %d steps, error estimate %.3e", fine.steps, estimate)
        if estimate <= cfg.tolerance:
            return fine, estimate
        coarse = fine
    raise ConvergenceError(
        f"no convergence to {cfg.tolerance:g} after {cfg.max_halvings} step halvings "
        f"({coarse.steps} steps)",
        last_iterate=coarse.result.copy(),
    )


@dataclass(frozen=True)
class GroupCurve:
    """A group-valued curve ``μ`` with optional exact derivative."""

    fn: Callable[[float], np.ndarray]
    interval: tuple[float, float]
    derivative: Optional[Callable[[float], np.ndarray]] = None

    def __call__(self, t: float) -> np.ndarray:
        return np.asarray(self.fn(t), dtype=float)

    def velocity(self, t: float, h: float = 1e-3) -> np.ndarray:
        if self.derivative is not None:
            return np.asarray(self.derivative(t), dtype=float)
        r, r1 = self.interval
        # five-point stencil, shifted to stay inside the interval
        c = min(max(t, r + 2 * h), r1 - 2 * h)
        f = self
        central = (-f(c + 2 * h) + 8 * f(c + h) - 8 * f(c - h) + f(c - 2 * h)) / (12 * h)
        if c == t:
            return central
        # second-order Taylor correction towards t
        second = (f(c + h) - 2 * f(c) + f(c - h)) / h**2
        return central + (t - c) * second

    def right_translate(self, g: np.ndarray) -> "GroupCurve":
        g = np.asarray(g, dtype=float)
        deriv = None if self.derivative is None else (lambda t: self.derivative(t) @ g)
        return GroupCurve(lambda t: self.fn(t) @ g, self.interval, deriv)

    @classmethod
    def from_trajectory(cls, traj: Trajectory) -> "GroupCurve":
        return cls(traj.at, (traj.start, traj.end))


def log_derivative(ctx: LieContext, mu: GroupCurve) -> Curve:
    """``δ(μ) = μ̇·μ^{-1}`` as an algebra-valued curve."""

    def delta(t: float) -> np.ndarray:
        g = mu(t)
        det = np.linalg.det(g)
        if not np.isfinite(det) or abs(det) < 1e-300:
            raise SingularElementError("group curve value is not invertible", t=t)
        return np.linalg.solve(g.T, mu.velocity(t).T).T

    return FunctionCurve(delta, mu.interval, order=0)
