"""Piecewise truncated-exponential approximation of adjoint transport.

On the panel ``[t_p, t_{p+1}]`` of a uniform subdivision the transport is
replaced by ``Λ[φ(t_p)]_N(t - t_p, Y_p)`` with
``Λ[X]_N(τ, Y) = Σ_{k ≤ N} τ^k/k! · ad_X^k(Y)`` and ``Y_p`` the value the
previous panel reached at ``t_p``.
"""

from __future__ import annotations

import bisect
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field

from src.core.curves import Curve, PiecewiseCurve, PolynomialCurve
from src.core.errors import InvalidArgumentError
from src.core.lie import LieContext
from src.core.seminorms import SeminormFamily

logger = logging.getLogger(__name__)

ANCHOR_SCHEME = "Λ[φ(t_p)]_n(t − t_p, Y_p) → Ad_{∫_r^tφ}(Y)"
ANCHOR_DEFECT = "v(α̇[p] − [φ, α[p]]) ≤ c·(v(X_p − φ)·A + v_∞(φ)·B)"


def _ad_powers(X: np.ndarray, Y: np.ndarray, n: int) -> list[np.ndarray]:
    out = [Y]
    for _ in range(n):
        out.append(X @ out[-1] - out[-1] @ X)
    return out


def lambda_poly(ctx: LieContext, X, n: int, t: float, Y) -> np.ndarray:
    """``Σ_{k=0}^n t^k/k! · ad_X^k(Y)``."""
    if n < 0:
        raise InvalidArgumentError(f"truncation degree must be non-negative, got {n}")
    X = ctx.algebra_element(X, "X")
    Y = ctx.algebra_element(Y, "Y")
    acc = np.zeros_like(Y)
    for k, Z in enumerate(_ad_powers(X, Y, n)):
        acc = acc + (t**k / math.factorial(k)) * Z
    return ctx.project(acc)


class TransportScheme(BaseModel):
    """Subdivision count ``n`` and truncation degree (defaults to ``n``)."""

    n: int = Field(ge=1)
    truncation: Optional[int] = Field(default=None, ge=0)

    @property
    def degree(self) -> int:
        return self.n if self.truncation is None else self.truncation


class PiecewiseTransport:
    """The glued scheme output for one initial value ``Y``."""

    def __init__(self, ctx: LieContext, curve: Curve, scheme: TransportScheme, Y: np.ndarray):
        self.ctx = ctx
        self.curve = curve
        self.scheme = scheme
        r, r1 = curve.interval
        n, N = scheme.n, scheme.degree
        self.nodes = [r + p / n * (r1 - r) for p in range(n + 1)]
        self.generators: list[np.ndarray] = []
        self.seeds: list[np.ndarray] = []
        self.pieces: list[PolynomialCurve] = []
        seed = Y
        for p in range(n):
            a, b = self.nodes[p], self.nodes[p + 1]
            X = curve.eval(a)
            coeffs = [Z / math.factorial(k) for k, Z in enumerate(_ad_powers(X, seed, N))]
            piece = PolynomialCurve(coeffs, (a, b), center=a)
            self.generators.append(X)
            self.seeds.append(seed)
            self.pieces.append(piece)
            seed = piece.eval(b)

    @property
    def n(self) -> int:
        return self.scheme.n

    def panel_index(self, t: float) -> int:
        k = bisect.bisect_right(self.nodes, t) - 1
        return min(max(k, 0), self.n - 1)

    def __call__(self, t: float) -> np.ndarray:
        return self.pieces[self.panel_index(t)].eval(t)

    def derivative(self, t: float) -> np.ndarray:
        return self.pieces[self.panel_index(t)].eval(t, 1)

    def node_values(self) -> list[np.ndarray]:
        return [self.seeds[0]] + [piece.eval(b) for piece, b in zip(self.pieces, self.nodes[1:])]

    def endpoint_mismatch(self) -> float:
        """``max_p ‖α[p](t_{p+1}) - α[p+1](t_{p+1})‖``."""
        gaps = [
            float(np.max(np.abs(self.pieces[p].eval(self.nodes[p + 1]) - self.pieces[p + 1].eval(self.nodes[p + 1]))))
            for p in range(self.n - 1)
        ]
        return max(gaps, default=0.0)

    def as_curve(self) -> PiecewiseCurve:
        return PiecewiseCurve(self.nodes, self.pieces)


def transport_scheme(ctx: LieContext, curve: Curve, scheme: TransportScheme, Y) -> PiecewiseTransport:
    Y = ctx.algebra_element(Y, "Y")
    if curve.shape != (ctx.dim, ctx.dim):
        raise InvalidArgumentError(f"curve of shape {curve.shape} in a dim={ctx.dim} context")
    return PiecewiseTransport(ctx, curve, scheme, Y)


@dataclass(frozen=True)
class PanelDefect:
    """Worst sampled panel defect ``α̇[p] - [φ, α[p]]`` and its two-term bound."""

    panel: int
    defect: float
    term_a: float
    term_b: float
    bound: float
    identity_gap: float


def defect_decomposition(
    ctx: LieContext,
    fam: SeminormFamily,
    transport: PiecewiseTransport,
    v_id: str = "op",
    bracket_constant: float = 2.0,
    samples_per_panel: int = 9,
) -> list[PanelDefect]:
    """Per-panel defects against ``c·(v(X_p - φ(τ))·A + v_∞(φ)·B)``.

    ``A = Σ_{k<N} |τ|^k/k!·v(ad^k Y_p)`` and ``B = |τ|^N/N!·v(ad^N Y_p)``;
    ``c`` is a bracket constant with ``v([X, Z]) ≤ c·v(X)·v(Z)``.
    ``identity_gap`` measures the exact algebraic split of the defect.
    """
    v = fam.get(v_id)
    curve = transport.curve
    N = transport.scheme.degree
    sup_phi = curve.sup_norm(v)
    rows = []
    for p, piece in enumerate(transport.pieces):
        a, b = piece.interval
        X = transport.generators[p]
        powers = _ad_powers(X, transport.seeds[p], N)
        norms = [v(Z) for Z in powers]
        worst = PanelDefect(p, 0.0, 0.0, 0.0, 0.0, 0.0)
        gap = 0.0
        for s in np.linspace(a, b, samples_per_panel):
            tau = s - a
            phi = curve.eval(s, left=(s == b))
            alpha = piece.eval(s)
            D = piece.eval(s, 1) - (phi @ alpha - alpha @ phi)
            split = -(tau**N / math.factorial(N)) * (phi @ powers[N] - powers[N] @ phi)
            diff = X - phi
            for k in range(N):
                split = split + (tau**k / math.factorial(k)) * (diff @ powers[k] - powers[k] @ diff)
            A = sum(abs(tau) ** k / math.factorial(k) * norms[k] for k in range(N))
            B = abs(tau) ** N / math.factorial(N) * norms[N]
            term_a = v(diff) * A
            term_b = sup_phi * B
            d = v(D)
            gap = max(gap, float(np.max(np.abs(D - split))))
            if d >= worst.defect:
                worst = PanelDefect(p, d, term_a, term_b, bracket_constant * (term_a + term_b), 0.0)
        rows.append(PanelDefect(p, worst.defect, worst.term_a, worst.term_b, worst.bound, gap))
    return rows
