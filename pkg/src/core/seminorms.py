"""Finite seminorm families on matrix spaces.

A family holds named base norms plus declared dominations ``v ≤ w``. Positive
multiples are available symbolically: the identifier ``"2*op"`` evaluates to
twice the operator norm without being registered.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from pydantic import BaseModel

from .errors import InvalidArgumentError, UnknownSeminormError

logger = logging.getLogger(__name__)

NormFn = Callable[[np.ndarray], float]


def operator_norm(X: np.ndarray) -> float:
    X = np.asarray(X, dtype=float)
    if X.ndim < 2:
        return float(np.max(np.abs(X), initial=0.0))
    return float(np.linalg.norm(X, 2))


def frobenius_norm(X: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(X, dtype=float)))


def max_entry_norm(X: np.ndarray) -> float:
    return float(np.max(np.abs(np.asarray(X, dtype=float)), initial=0.0))


def format_scaled(c: float, base: str) -> str:
    return base if c == 1.0 else f"{c!r}*{base}"


def parse_scaled(norm_id: str) -> tuple[float, str]:
    """Split ``"c*base"`` into ``(c, base)``; plain ids have ``c = 1``."""
    if "*" not in norm_id:
        return 1.0, norm_id
    head, _, base = norm_id.partition("*")
    try:
        c = float(head)
    except ValueError:
        raise UnknownSeminormError(f"malformed seminorm id {norm_id!r}") from None
    if not (c > 0 and math.isfinite(c)):
        raise UnknownSeminormError(f"seminorm multiplier must be positive: {norm_id!r}")
    return c, base


class AxiomReport(BaseModel):
    checked: int
    violations: list[str] = []

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class SeminormFamily:
    norms: dict[str, NormFn]
    dominations: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        for v, w in self.dominations:
            self.get(v)
            self.get(w)

    @classmethod
    def standard(cls) -> "SeminormFamily":
        """Operator, Frobenius and max-entry norms with ``max ≤ op ≤ fro``."""
        return cls(
            norms={"op": operator_norm, "fro": frobenius_norm, "max": max_entry_norm},
            dominations=(("max", "op"), ("op", "fro")),
        )

    @property
    def ids(self) -> list[str]:
        return list(self.norms)

    def get(self, norm_id: str) -> NormFn:
        c, base = parse_scaled(norm_id)
        try:
            fn = self.norms[base]
        except KeyError:
            raise UnknownSeminormError(
                f"unknown seminorm {norm_id!r} (family has {', '.join(self.norms)})"
            ) from None
        if c == 1.0:
            return fn
        return lambda X: c * fn(X)

    def __contains__(self, norm_id: str) -> bool:
        try:
            self.get(norm_id)
        except UnknownSeminormError:
            return False
        return True

    def scaled(self, norm_id: str, c: float) -> str:
        """Identifier of ``c`` times ``norm_id``."""
        if not c > 0:
            raise InvalidArgumentError(f"scale must be positive, got {c}")
        c0, base = parse_scaled(norm_id)
        self.get(base)
        return format_scaled(c0 * c, base)

    def evaluate(self, norm_id: str, X) -> float:
        return self.get(norm_id)(np.asarray(X, dtype=float))

    def norm_many(self, norm_id: str, Xs: Iterable[np.ndarray]) -> np.ndarray:
        fn = self.get(norm_id)
        return np.array([fn(np.asarray(X, dtype=float)) for X in Xs])

    def with_norm(self, norm_id: str, fn: NormFn, dominated_by: Sequence[str] = ()) -> "SeminormFamily":
        norms = dict(self.norms)
        norms[norm_id] = fn
        doms = self.dominations + tuple((norm_id, w) for w in dominated_by)
        return SeminormFamily(norms=norms, dominations=doms)

    def check_axioms(
        self,
        samples: Sequence[np.ndarray],
        rng: Optional[np.random.Generator] = None,
        rtol: float = 1e-12,
    ) -> AxiomReport:
        """Sampled check of homogeneity, the triangle inequality and the declared dominations."""
        rng = rng if rng is not None else np.random.default_rng(0)
        samples = [np.asarray(X, dtype=float) for X in samples]
        violations: list[str] = []
        count = 0
        for norm_id, fn in self.norms.items():
            for i, X in enumerate(samples):
                Y = samples[(i + 1) % len(samples)]
                lam = float(rng.normal()) * 3.0
                nx, ny = fn(X), fn(Y)
                tol = rtol * (1.0 + nx + ny) * (1.0 + abs(lam))
                if nx < 0:
                    violations.append(f"{norm_id}: negative value on sample {i}")
                if abs(fn(lam * X) - abs(lam) * nx) > tol:
                    violations.append(f"{norm_id}: homogeneity fails on sample {i}")
                if fn(X + Y) > nx + ny + tol:
                    violations.append(f"{norm_id}: triangle inequality fails on sample {i}")
                count += 1
        for v, w in self.dominations:
            fv, fw = self.get(v), self.get(w)
            for i, X in enumerate(samples):
                if fv(X) > fw(X) * (1.0 + rtol) + rtol:
                    violations.append(f"{v} <= {w} fails on sample {i}")
                count += 1
        if violations:
            logger.warning("Seminorm axiom check found %d violations", len(violations))
        return AxiomReport(checked=count, violations=violations)


def seminorm_eval(fam: SeminormFamily, norm_id: str, X) -> float:
    """Value of the named seminorm at ``X``."""
    return fam.evaluate(norm_id, X)
