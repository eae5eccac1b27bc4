"""Composite Gauss–Legendre quadrature for vector- and matrix-valued integrands."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from .config import QuadratureConfig
from .curves import Curve
from .errors import InvalidArgumentError, QuadratureError

logger = logging.getLogger(__name__)


@lru_cache(maxsize=16)
def _rule(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(nodes)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@dataclass(frozen=True)
class QuadratureResult:
    value: np.ndarray
    error: float
    panels: int
    mass: float


def _composite(
    f: Callable[[float], np.ndarray],
    edges: np.ndarray,
    nodes: int,
) -> tuple[np.ndarray, float]:
    x, w = _rule(nodes)
    total = None
    mass = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        half = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        for xi, wi in zip(x, w):
            v = np.asarray(f(mid + half * xi), dtype=float)
            total = wi * half * v if total is None else total + wi * half * v
            mass += wi * half * float(np.max(np.abs(v), initial=0.0))
    return total, mass


def integrate(
    f: Callable[[float], np.ndarray],
    a: float,
    b: float,
    breakpoints: Sequence[float] = (),
    cfg: Optional[QuadratureConfig] = None,
) -> QuadratureResult:
    """``∫_a^b f`` by panel halving until successive estimates agree.

    Panels always start at the breakpoints inside ``(a, b)``; the integrand is
    only sampled at interior Gauss nodes, so one-sided limits never matter.
    Reversed limits give the negated integral.
    """
    cfg = cfg or QuadratureConfig()
    a, b = float(a), float(b)
    if a == b:
        shape = np.shape(f(a))
        return QuadratureResult(np.zeros(shape), 0.0, 0, 0.0)
    if a > b:
        res = integrate(f, b, a, breakpoints, cfg)
        return QuadratureResult(-res.value, res.error, res.panels, res.mass)

    base = np.array([a] + sorted(float(t) for t in breakpoints if a < t < b) + [b])
    if len(base) - 1 > cfg.max_panels:
        raise InvalidArgumentError(f"{len(base) - 1} breakpoint panels exceed max_panels")
    edges = base
    prev, mass = _composite(f, edges, cfg.nodes)
    while True:
        mids = 0.5 * (edges[:-1] + edges[1:])
        edges = np.sort(np.concatenate([edges, mids]))
        cur, mass = _composite(f, edges, cfg.nodes)
        diff = float(np.max(np.abs(cur - prev), initial=0.0))
        scale = max(float(np.max(np.abs(cur), initial=0.0)), mass)
        panels = len(edges) - 1
        logger.debug("quadrature on [%g, %g]: %d panels, diff %.3e", a, b, panels, diff)
        if diff <= cfg.rel_tol * scale or diff == 0.0:
            return QuadratureResult(cur, diff, panels, mass)
        if 2 * panels > cfg.max_panels:
            raise QuadratureError(
                f"quadrature on [{a}, {b}] did not converge within {cfg.max_panels} panels",
                estimate=cur,
                achieved=diff,
            )
        prev = cur


def riemann_integral(
    curve: Curve,
    a: Optional[float] = None,
    b: Optional[float] = None,
    cfg: Optional[QuadratureConfig] = None,
) -> np.ndarray:
    """``∫_a^b γ(s) ds`` over the curve's interval (or a sub-interval)."""
    a = curve.start if a is None else a
    b = curve.end if b is None else b
    return integrate(curve.eval, a, b, curve.breakpoints, cfg).value


def seminorm_integral(
    norm: Callable[[np.ndarray], float],
    curve: Curve,
    a: Optional[float] = None,
    b: Optional[float] = None,
    rel_tol: float = 1e-9,
) -> float:
    """Upper estimate of ``∫_a^b q(γ(s)) ds``.

    ``q∘γ`` is only Lipschitz where singular values cross, so the result is
    the quadrature value plus its achieved error.
    """
    a = curve.start if a is None else a
    b = curve.end if b is None else b
    cfg = QuadratureConfig(rel_tol=rel_tol, max_panels=512)
    try:
        res = integrate(lambda s: norm(curve.eval(s)), a, b, curve.breakpoints, cfg)
        return float(res.value) + res.error
    except QuadratureError as e:
        logger.debug("seminorm integral kept the unconverged estimate (%.3e)", e.achieved)
        return float(e.estimate) + e.achieved
