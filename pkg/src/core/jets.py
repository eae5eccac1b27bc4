"""Truncated Taylor series of matrix-valued functions.

A jet of order ``n`` at ``t0`` is the list ``[a_0, …, a_n]`` with
``f(t0 + h) = Σ a_k h^k + O(h^{n+1})``; derivatives are ``k!·a_k``.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

Jet = list[np.ndarray]


def cauchy_product(a: Sequence[np.ndarray], b: Sequence[np.ndarray], n: int | None = None) -> Jet:
    """Jet of the matrix product ``f·g``."""
    if n is None:
        n = min(len(a), len(b)) - 1
    out = []
    for k in range(n + 1):
        acc = a[0] @ b[k]
        for i in range(1, k + 1):
            acc = acc + a[i] @ b[k - i]
        out.append(acc)
    return out


def flow_jet(phi: Sequence[np.ndarray], g0: np.ndarray, n: int) -> Jet:
    """Jet of the solution of ``ġ = φ·g`` with ``g(t0) = g0``; needs ``len(phi) ≥ n``."""
    g = [np.asarray(g0, dtype=float)]
    for k in range(n):
        acc = phi[0] @ g[k]
        for i in range(1, k + 1):
            acc = acc + phi[i] @ g[k - i]
        g.append(acc / (k + 1))
    return g


def inverse_flow_jet(phi: Sequence[np.ndarray], h0: np.ndarray, n: int) -> Jet:
    """Jet of ``h = g⁻¹`` where ``ġ = φ·g``, i.e. of the solution of ``ḣ = -h·φ``."""
    h = [np.asarray(h0, dtype=float)]
    for k in range(n):
        acc = h[k] @ phi[0]
        for i in range(1, k + 1):
            acc = acc + h[k - i] @ phi[i]
        h.append(-acc / (k + 1))
    return h


def conjugate_jet(g: Sequence[np.ndarray], y: Sequence[np.ndarray], ginv: Sequence[np.ndarray], n: int) -> Jet:
    """Jet of ``g·Y·g⁻¹`` from the jets of the three factors."""
    return cauchy_product(cauchy_product(g, y, n), ginv, n)


def add_jets(a: Sequence[np.ndarray], b: Sequence[np.ndarray]) -> Jet:
    return [x + y for x, y in zip(a, b)]


def to_derivatives(jet: Sequence[np.ndarray]) -> list[np.ndarray]:
    return [math.factorial(k) * c for k, c in enumerate(jet)]


def from_derivatives(derivs: Sequence[np.ndarray]) -> Jet:
    return [np.asarray(d, dtype=float) / math.factorial(k) for k, d in enumerate(derivs)]


def rescale_jet(jet: Sequence[np.ndarray], a: float) -> Jet:
    """Jet of ``t ↦ f(a·t)`` from the jet of ``f`` at the image point."""
    return [c * a**k for k, c in enumerate(jet)]


def evaluate_jet(jet: Sequence[np.ndarray], h: float) -> np.ndarray:
    acc = np.zeros_like(jet[0])
    for c in reversed(jet):
        acc = acc * h + c
    return acc
