"""Time steppers for ``μ̇ = φ(t)·μ`` and the dense trajectories they produce."""

from __future__ import annotations

import bisect
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from src.core.config import StepperConfig
from src.core.curves import Curve
from src.core.errors import InvalidArgumentError
from src.core.lie import LieContext

logger = logging.getLogger(__name__)

# Gauss nodes and weights of the fourth-order commutator-free method
_SQ3 = math.sqrt(3.0)
CF4_NODES = (0.5 - _SQ3 / 6.0, 0.5 + _SQ3 / 6.0)
CF4_ALPHA = ((3.0 - 2.0 * _SQ3) / 12.0, (3.0 + 2.0 * _SQ3) / 12.0)

REFERENCE_REFINEMENT = 16

StepFn = Callable[[LieContext, Curve, float, float, np.ndarray], np.ndarray]


def exponential_midpoint_step(ctx: LieContext, curve: Curve, t: float, h: float, mu: np.ndarray) -> np.ndarray:
    """``μ ↦ exp(h·φ(t + h/2))·μ``."""
    return ctx.exp_unchecked(h * curve.eval(t + 0.5 * h)) @ mu


def commutator_free_4_step(ctx: LieContext, curve: Curve, t: float, h: float, mu: np.ndarray) -> np.ndarray:
    A1 = curve.eval(t + CF4_NODES[0] * h)
    A2 = curve.eval(t + CF4_NODES[1] * h)
    a1, a2 = CF4_ALPHA
    first = ctx.exp_unchecked(h * (a2 * A1 + a1 * A2))
    second = ctx.exp_unchecked(h * (a1 * A1 + a2 * A2))
    return second @ (first @ mu)


def classical_rk4_step(ctx: LieContext, curve: Curve, t: float, h: float, mu: np.ndarray) -> np.ndarray:
    """One classical 4-stage step; the last stage reads the left limit at ``t + h``."""
    end_left = h > 0
    F0 = curve.eval(t, left=not end_left)
    Fm = curve.eval(t + 0.5 * h)
    F1 = curve.eval(t + h, left=end_left)
    k1 = F0 @ mu
    k2 = Fm @ (mu + 0.5 * h * k1)
    k3 = Fm @ (mu + 0.5 * h * k2)
    k4 = F1 @ (mu + h * k3)
    return mu + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass(frozen=True)
class Stepper:
    name: str
    order: int
    step: StepFn
    refinement: int = 1


STEPPERS: dict[str, Stepper] = {
    "exponential-midpoint": Stepper("exponential-midpoint", 2, exponential_midpoint_step),
    "commutator-free-4": Stepper("commutator-free-4", 4, commutator_free_4_step),
    "reference-dense-RK": Stepper(
        "reference-dense-RK", 4, classical_rk4_step, refinement=REFERENCE_REFINEMENT
    ),
}


def get_stepper(method: str) -> Stepper:
    try:
        return STEPPERS[method]
    except KeyError:
        raise InvalidArgumentError(
            f"Unknown stepper: {method} (available: {', '.join(STEPPERS)})"
        ) from None


def step_grid(curve: Curve, s: float, t: float, steps: int) -> np.ndarray:
    """Uniform grid of ``steps`` panels on ``[s, t]`` with the breakpoints inserted."""
    grid = np.linspace(s, t, steps + 1)
    inner = [b for b in curve.breakpoints if s < b < t]
    if inner:
        grid = np.unique(np.concatenate([grid, inner]))
    return grid


class Trajectory:
    """Grid values ``μ(t_k) = ∫_s^{t_k} φ`` of one stepper run.

    Off-grid times are filled in by one extra step of the same method from
    the grid node on their left, so the dense trajectory is continuous.
    """

    def __init__(self, ctx: LieContext, curve: Curve, stepper: Stepper, times: np.ndarray, values: np.ndarray):
        self.ctx = ctx
        self.curve = curve
        self.stepper = stepper
        self.times = times
        self.values = values

    @classmethod
    def compute(
        cls,
        ctx: LieContext,
        curve: Curve,
        s: float,
        t: float,
        steps: int,
        method: str = "exponential-midpoint",
        initial: Optional[np.ndarray] = None,
    ) -> "Trajectory":
        stepper = get_stepper(method)
        times = step_grid(curve, s, t, steps * stepper.refinement)
        values = np.empty((len(times), ctx.dim, ctx.dim))
        values[0] = np.eye(ctx.dim) if initial is None else initial
        for k in range(len(times) - 1):
            h = times[k + 1] - times[k]
            values[k + 1] = stepper.step(ctx, curve, times[k], h, values[k])
        return cls(ctx, curve, stepper, times, values)

    @property
    def start(self) -> float:
        return float(self.times[0])

    @property
    def end(self) -> float:
        return float(self.times[-1])

    @property
    def steps(self) -> int:
        return len(self.times) - 1

    @property
    def result(self) -> np.ndarray:
        return self.values[-1]

    def at(self, t: float) -> np.ndarray:
        t = float(t)
        if t < self.start - 1e-12 or t > self.end + 1e-12:
            raise InvalidArgumentError(f"t={t!r} outside trajectory [{self.start}, {self.end}]")
        k = bisect.bisect_right(self.times, t) - 1
        k = min(max(k, 0), self.steps)
        h = t - self.times[k]
        if h <= 0.0 or k == self.steps:
            return self.values[k].copy()
        return self.stepper.step(self.ctx, self.curve, float(self.times[k]), h, self.values[k])

    def inverse_at(self, t: float) -> np.ndarray:
        return self.ctx.inverse_unchecked(self.at(t), t=t)

    def adjoint_at(self, t: float, Y: np.ndarray) -> np.ndarray:
        """``Ad_{μ(t)}(Y)``."""
        g = self.at(t)
        return g @ Y @ self.ctx.inverse_unchecked(g, t=t)

    def inverse_adjoint_at(self, t: float, Y: np.ndarray) -> np.ndarray:
        """``Ad_{μ(t)^{-1}}(Y)``."""
        g = self.at(t)
        return self.ctx.inverse_unchecked(g, t=t) @ Y @ g

    def defect(self) -> float:
        """Max over steps of ``‖(Δμ/h)·μ̄^{-1} - φ(mid)‖`` in operator norm."""
        worst = 0.0
        for k in range(self.steps):
            h = self.times[k + 1] - self.times[k]
            mu0, mu1 = self.values[k], self.values[k + 1]
            mean = 0.5 * (mu0 + mu1)
            D = np.linalg.solve(mean.T, ((mu1 - mu0) / h).T).T
            gap = D - self.curve.eval(self.times[k] + 0.5 * h)
            worst = max(worst, float(np.linalg.norm(gap, 2)))
        return worst

    def orthogonality_drift(self) -> float:
        """``max_k ‖μ_kᵀ μ_k - 1‖``; meaningful for orthogonal groups."""
        eye = np.eye(self.ctx.dim)
        return max(float(np.max(np.abs(g.T @ g - eye))) for g in self.values)
