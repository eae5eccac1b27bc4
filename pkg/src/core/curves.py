"""Algebra-valued curves with exact derivatives.

Every curve lives on a closed interval ``[r, r']`` and evaluates derivatives
up to its declared ``order``. Piecewise curves are right-continuous at their
breakpoints; pass ``left=True`` to read the left limit instead.
"""

from __future__ import annotations

import bisect
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Literal, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, Field
from scipy.optimize import brentq

from .errors import ChartDomainError, InvalidArgumentError
from .jets import Jet
from .lie import LieContext

logger = logging.getLogger(__name__)

ORDER_SMOOTH = math.inf
INTERVAL_TOL = 1e-12

Order = Union[int, float]


class Curve(ABC):
    """A piecewise smooth map ``[r, r'] → g``."""

    def __init__(
        self,
        interval: tuple[float, float],
        shape: tuple[int, int],
        order: Order = ORDER_SMOOTH,
        breakpoints: Sequence[float] = (),
    ):
        r, r1 = float(interval[0]), float(interval[1])
        if not r < r1:
            raise InvalidArgumentError(f"curve interval must satisfy r < r', got [{r}, {r1}]")
        if order < 0:
            raise InvalidArgumentError(f"curve order must be non-negative, got {order}")
        self.interval = (r, r1)
        self.shape = tuple(shape)
        self.order = order
        self.breakpoints = tuple(sorted(float(b) for b in breakpoints if r < b < r1))

    @property
    def start(self) -> float:
        return self.interval[0]

    @property
    def end(self) -> float:
        return self.interval[1]

    @property
    def length(self) -> float:
        return self.interval[1] - self.interval[0]

    @property
    def knots(self) -> tuple[float, ...]:
        return (self.start, *self.breakpoints, self.end)

    def segments(self, a: Optional[float] = None, b: Optional[float] = None) -> list[tuple[float, float]]:
        """Smooth sub-intervals of ``[a, b]`` cut at the breakpoints."""
        a = self.start if a is None else a
        b = self.end if b is None else b
        cuts = [a] + [k for k in self.breakpoints if a < k < b] + [b]
        return list(zip(cuts[:-1], cuts[1:]))

    def _clamp(self, t: float) -> float:
        r, r1 = self.interval
        tol = INTERVAL_TOL * max(1.0, abs(r), abs(r1))
        if t < r - tol or t > r1 + tol:
            raise InvalidArgumentError(f"t={t!r} outside curve interval [{r}, {r1}]")
        return min(max(t, r), r1)

    def eval(self, t: float, m: int = 0, left: bool = False) -> np.ndarray:
        """The ``m``-th derivative at ``t``."""
        if m < 0 or m > self.order:
            raise InvalidArgumentError(f"derivative order {m} exceeds curve order {self.order}")
        return self._eval(self._clamp(float(t)), int(m), left)

    @abstractmethod
    def _eval(self, t: float, m: int, left: bool) -> np.ndarray:
        ...

    def __call__(self, t: float) -> np.ndarray:
        return self.eval(t)

    def jet(self, t: float, n: int, left: bool = False) -> Jet:
        """Taylor coefficients ``[φ(t), φ'(t), …, φ^{(n)}(t)/n!]``."""
        return [self.eval(t, k, left) / math.factorial(k) for k in range(n + 1)]

    def sample_times(self, n: int = 65) -> np.ndarray:
        grid = np.linspace(self.start, self.end, n)
        return np.unique(np.concatenate([grid, np.asarray(self.knots)]))

    def sample(self, n: int = 65, m: int = 0) -> list[np.ndarray]:
        """Values at the sample times; breakpoints contribute both one-sided values."""
        out = []
        for t in self.sample_times(n):
            out.append(self.eval(t, m))
            if t in self.breakpoints:
                out.append(self.eval(t, m, left=True))
        return out

    def sup_norm(self, norm: Callable[[np.ndarray], float], order: int = 0, n: int = 129) -> float:
        """Sampled ``max_{m ≤ order} sup_t norm(φ^{(m)}(t))``."""
        best = 0.0
        for m in range(order + 1):
            for X in self.sample(n, m):
                best = max(best, norm(X))
        return best

    # arithmetic -------------------------------------------------------

    def __add__(self, other: "Curve") -> "Curve":
        if not isinstance(other, Curve):
            return NotImplemented
        return SumCurve([(1.0, self), (1.0, other)])

    def __radd__(self, other):
        if isinstance(other, (int, float)) and other == 0:
            return self
        return NotImplemented

    def __sub__(self, other: "Curve") -> "Curve":
        if not isinstance(other, Curve):
            return NotImplemented
        return SumCurve([(1.0, self), (-1.0, other)])

    def __mul__(self, c: float) -> "Curve":
        if not isinstance(c, (int, float)):
            return NotImplemented
        return SumCurve([(float(c), self)])

    __rmul__ = __mul__

    def __neg__(self) -> "Curve":
        return SumCurve([(-1.0, self)])


class ConstantCurve(Curve):
    def __init__(self, X, interval: tuple[float, float] = (0.0, 1.0)):
        self.value = np.asarray(X, dtype=float)
        super().__init__(interval, self.value.shape)

    def _eval(self, t, m, left):
        return self.value.copy() if m == 0 else np.zeros(self.shape)

    def __repr__(self):
        return f"ConstantCurve(interval={self.interval})"


def zero_curve(d: int, interval: tuple[float, float] = (0.0, 1.0)) -> ConstantCurve:
    return ConstantCurve(np.zeros((d, d)), interval)


class PolynomialCurve(Curve):
    """``t ↦ Σ_k C_k (t - center)^k``."""

    def __init__(
        self,
        coeffs: Sequence[np.ndarray],
        interval: tuple[float, float] = (0.0, 1.0),
        center: float = 0.0,
    ):
        if len(coeffs) == 0:
            raise InvalidArgumentError("polynomial curve needs at least one coefficient")
        self.coeffs = [np.asarray(c, dtype=float) for c in coeffs]
        self.center = float(center)
        super().__init__(interval, self.coeffs[0].shape)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def _eval(self, t, m, left):
        h = t - self.center
        acc = np.zeros(self.shape)
        for k in range(self.degree, m - 1, -1):
            acc = acc * h + self.coeffs[k] * (math.factorial(k) / math.factorial(k - m))
        return acc

    def __repr__(self):
        return f"PolynomialCurve(degree={self.degree}, interval={self.interval})"


class TrigCurve(Curve):
    """``t ↦ A·sin(ω t + θ)``."""

    def __init__(
        self,
        A,
        frequency: float,
        phase: float = 0.0,
        interval: tuple[float, float] = (0.0, 1.0),
    ):
        self.amplitude = np.asarray(A, dtype=float)
        self.frequency = float(frequency)
        self.phase = float(phase)
        super().__init__(interval, self.amplitude.shape)

    def _eval(self, t, m, left):
        w = self.frequency
        return self.amplitude * (w**m * math.sin(w * t + self.phase + m * math.pi / 2))

    def __repr__(self):
        return f"TrigCurve(frequency={self.frequency}, phase={self.phase}, interval={self.interval})"


class SumCurve(Curve):
    """Linear combination ``Σ c_i φ_i`` of curves on a common interval."""

    def __init__(self, terms: Sequence[tuple[float, Curve]]):
        if not terms:
            raise InvalidArgumentError("sum curve needs at least one term")
        flat: list[tuple[float, Curve]] = []
        for c, curve in terms:
            if isinstance(curve, SumCurve):
                flat.extend((c * c2, inner) for c2, inner in curve.terms)
            else:
                flat.append((float(c), curve))
        first = flat[0][1]
        for _, curve in flat:
            if not np.allclose(curve.interval, first.interval, rtol=0, atol=INTERVAL_TOL):
                raise InvalidArgumentError(
                    f"sum of curves on different intervals {first.interval} and {curve.interval}"
                )
        self.terms = flat
        super().__init__(
            first.interval,
            first.shape,
            order=min(curve.order for _, curve in flat),
            breakpoints=sorted({b for _, curve in flat for b in curve.breakpoints}),
        )

    def _eval(self, t, m, left):
        acc = np.zeros(self.shape)
        for c, curve in self.terms:
            if c != 0.0:
                acc = acc + c * curve.eval(t, m, left)
        return acc


class PiecewiseCurve(Curve):
    """Curve given by one smooth piece per knot interval, right-continuous at knots."""

    def __init__(self, knots: Sequence[float], pieces: Sequence[Curve]):
        knots = [float(k) for k in knots]
        if len(knots) < 2 or any(b <= a for a, b in zip(knots[:-1], knots[1:])):
            raise InvalidArgumentError(f"piecewise knots must be strictly increasing: {knots}")
        if len(pieces) != len(knots) - 1:
            raise InvalidArgumentError(
                f"{len(knots) - 1} knot intervals but {len(pieces)} pieces"
            )
        for (a, b), piece in zip(zip(knots[:-1], knots[1:]), pieces):
            lo, hi = piece.interval
            tol = INTERVAL_TOL * max(1.0, abs(a), abs(b))
            if lo > a + tol or hi < b - tol:
                raise InvalidArgumentError(
                    f"piece on {piece.interval} does not cover knot interval [{a}, {b}]"
                )
        self.knot_list = knots
        self.pieces = list(pieces)
        inner = [b for piece in pieces for b in piece.breakpoints]
        super().__init__(
            (knots[0], knots[-1]),
            pieces[0].shape,
            order=min(p.order for p in pieces),
            breakpoints=sorted(set(knots[1:-1]) | set(inner)),
        )

    @classmethod
    def constant(cls, knots: Sequence[float], values: Sequence[np.ndarray]) -> "PiecewiseCurve":
        pieces = [ConstantCurve(v, (a, b)) for v, a, b in zip(values, knots[:-1], knots[1:])]
        return cls(knots, pieces)

    def piece_index(self, t: float, left: bool = False) -> int:
        i = bisect.bisect_right(self.knot_list, t) - 1
        i = min(max(i, 0), len(self.pieces) - 1)
        if left and i > 0 and t == self.knot_list[i]:
            i -= 1
        return i

    def _eval(self, t, m, left):
        piece = self.pieces[self.piece_index(t, left)]
        return piece.eval(piece._clamp(t), m, left)

    def refine(self, points: Sequence[float]) -> "PiecewiseCurve":
        """Same curve with additional (spurious) knots."""
        new_knots = sorted(set(self.knot_list) | {float(p) for p in points if self.start < p < self.end})
        pieces = [self.pieces[self.piece_index(a)] for a in new_knots[:-1]]
        return PiecewiseCurve(new_knots, pieces)

    def __repr__(self):
        return f"PiecewiseCurve(knots={self.knot_list})"


@dataclass(frozen=True)
class Reparametrization:
    """A C¹ map ``ρ: [ℓ, ℓ'] → ℝ`` with its derivative; affine maps are flagged."""

    fn: Callable[[float], float]
    derivative: Callable[[float], float]
    domain: tuple[float, float]
    slope: Optional[float] = None
    offset: Optional[float] = None

    @classmethod
    def affine(cls, a: float, b: float, domain: tuple[float, float]) -> "Reparametrization":
        """``ρ(s) = a·s + b``."""
        a, b = float(a), float(b)
        return cls(lambda s: a * s + b, lambda s: a, tuple(domain), slope=a, offset=b)

    @classmethod
    def identity(cls, domain: tuple[float, float]) -> "Reparametrization":
        return cls.affine(1.0, 0.0, domain)

    @classmethod
    def reversal(cls, interval: tuple[float, float]) -> "Reparametrization":
        """``ρ(s) = r + r' - s`` on ``[r, r']``."""
        r, r1 = interval
        return cls.affine(-1.0, r + r1, interval)

    @property
    def is_affine(self) -> bool:
        return self.slope is not None

    def __call__(self, s: float) -> float:
        return float(self.fn(s))

    def image_samples(self, n: int = 65) -> np.ndarray:
        return np.array([self(s) for s in np.linspace(*self.domain, n)])

    def preimages(self, value: float) -> list[float]:
        """Solutions of ``ρ(s) = value`` on each monotone bracket of the sample grid."""
        grid = np.linspace(*self.domain, 257)
        vals = [self(s) - value for s in grid]
        roots = []
        for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
            if fa == 0.0:
                roots.append(float(a))
            elif fa * fb < 0:
                roots.append(float(brentq(lambda s: self(s) - value, a, b, xtol=1e-15)))
        if vals[-1] == 0.0:
            roots.append(float(grid[-1]))
        return roots


class SubstitutedCurve(Curve):
    """``s ↦ ρ̇(s)·φ(ρ(s))``; derivatives are exact for affine ``ρ``."""

    def __init__(self, curve: Curve, rho: Reparametrization):
        r, r1 = curve.interval
        tol = INTERVAL_TOL * max(1.0, abs(r), abs(r1))
        image = rho.image_samples()
        if image.min() < r - tol or image.max() > r1 + tol:
            raise InvalidArgumentError(
                f"reparametrization range [{image.min():.6g}, {image.max():.6g}] "
                f"leaves curve interval [{r}, {r1}]"
            )
        self.curve = curve
        self.rho = rho
        if rho.is_affine:
            breaks = [(b - rho.offset) / rho.slope for b in curve.breakpoints] if rho.slope else []
            order = curve.order
        else:
            breaks = [s for b in curve.breakpoints for s in rho.preimages(b)]
            order = 0
        super().__init__(rho.domain, curve.shape, order=order, breakpoints=breaks)

    def _eval(self, t, m, left):
        rho = self.rho
        if rho.is_affine:
            a = rho.slope
            inner_left = left if a >= 0 else not left
            if a == 0.0:
                return np.zeros(self.shape)
            return a ** (m + 1) * self.curve.eval(rho(t), m, inner_left)
        v = float(rho.derivative(t))
        return v * self.curve.eval(rho(t), 0, left if v >= 0 else not left)


class ChartLineCurve(Curve):
    """``t ↦ A·(1 + (t - s)·A)^{-1}``.

    This is the right logarithmic derivative of the chart straight line
    ``t ↦ 1 + (t - s)·A``; its ``k``-th derivative is
    ``(-1)^k k! A^{k+1} (1 + (t - s)A)^{-(k+1)}``.
    """

    def __init__(self, A, start: float, interval: tuple[float, float]):
        self.A = np.asarray(A, dtype=float)
        self.anchor = float(start)
        super().__init__(interval, self.A.shape)

    def resolvent(self, t: float) -> np.ndarray:
        M = np.eye(self.shape[0]) + (t - self.anchor) * self.A
        try:
            return np.linalg.inv(M)
        except np.linalg.LinAlgError as e:
            raise ChartDomainError(f"chart line leaves the group at t={t!r}: {e}", M) from e

    def _eval(self, t, m, left):
        R = self.resolvent(t)
        AR = self.A @ R
        return (-1) ** m * math.factorial(m) * np.linalg.matrix_power(AR, m + 1)


class FunctionCurve(Curve):
    """Curve from callables: ``fn`` and optionally its derivatives ``[fn', fn'', …]``."""

    def __init__(
        self,
        fn: Callable[[float], np.ndarray],
        interval: tuple[float, float],
        derivatives: Sequence[Callable[[float], np.ndarray]] = (),
        order: Optional[Order] = None,
        breakpoints: Sequence[float] = (),
    ):
        self.fn = fn
        self.derivatives = list(derivatives)
        first = np.asarray(fn(float(interval[0])), dtype=float)
        super().__init__(
            interval,
            first.shape,
            order=len(self.derivatives) if order is None else order,
            breakpoints=breakpoints,
        )

    def _eval(self, t, m, left):
        if m == 0:
            return np.asarray(self.fn(t), dtype=float)
        return np.asarray(self.derivatives[m - 1](t), dtype=float)


# -- random families used by tests and suites ---------------------------------


def random_algebra_element(ctx: LieContext, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Algebra element with operator norm ``scale`` in a uniformly random direction."""
    X = ctx.from_coordinates(rng.normal(size=ctx.algebra_dim))
    n = float(np.linalg.norm(X, 2))
    return X * (scale / n) if n > 0 else X


def random_polynomial_curve(
    ctx: LieContext,
    rng: np.random.Generator,
    degree: int = 3,
    scale: float = 1.0,
    interval: tuple[float, float] = (0.0, 1.0),
) -> PolynomialCurve:
    coeffs = [random_algebra_element(ctx, rng, scale * float(rng.uniform(0.2, 1.0))) for _ in range(degree + 1)]
    return PolynomialCurve(coeffs, interval, center=interval[0])


def random_trig_curve(
    ctx: LieContext,
    rng: np.random.Generator,
    terms: int = 2,
    scale: float = 1.0,
    interval: tuple[float, float] = (0.0, 1.0),
) -> Curve:
    parts = [
        (
            1.0,
            TrigCurve(
                random_algebra_element(ctx, rng, scale / terms),
                frequency=float(rng.uniform(0.5, 2.0 * math.pi)),
                phase=float(rng.uniform(0.0, 2.0 * math.pi)),
                interval=interval,
            ),
        )
        for _ in range(terms)
    ]
    return SumCurve(parts)


def random_smooth_curve(
    ctx: LieContext,
    rng: np.random.Generator,
    scale: float = 1.0,
    interval: tuple[float, float] = (0.0, 1.0),
) -> Curve:
    """Polynomial plus trigonometric curve with sup-norm of order ``scale``."""
    poly = random_polynomial_curve(ctx, rng, degree=2, scale=scale / 2, interval=interval)
    trig = random_trig_curve(ctx, rng, terms=1, scale=scale / 2, interval=interval)
    return poly + trig


# -- serialized curve descriptions ----------------------------------------------


class CurveSpec(BaseModel):
    """Closed-form curve family with coefficients in basis coordinates."""

    kind: Literal["constant", "polynomial", "trig", "piecewise-constant"]
    interval: tuple[float, float] = (0.0, 1.0)
    coefficients: list[list[float]] = Field(min_length=1)
    frequency: float = 1.0
    phase: float = 0.0
    knots: list[float] = []

    def build(self, ctx: LieContext) -> Curve:
        for c in self.coefficients:
            if len(c) != ctx.algebra_dim:
                raise InvalidArgumentError(
                    f"{len(c)} coordinates for a {ctx.algebra_dim}-dimensional algebra"
                )
        mats = [ctx.from_coordinates(c) for c in self.coefficients]
        if self.kind == "constant":
            return ConstantCurve(mats[0], self.interval)
        if self.kind == "polynomial":
            return PolynomialCurve(mats, self.interval, center=self.interval[0])
        if self.kind == "trig":
            return TrigCurve(mats[0], self.frequency, self.phase, self.interval)
        knots = self.knots or list(np.linspace(*self.interval, len(mats) + 1))
        return PiecewiseCurve.constant(knots, mats)
