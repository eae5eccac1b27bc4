"""Built-in Lie contexts and context definition files."""

from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import Optional

import numpy as np
import yaml
from pydantic import BaseModel, Field, ValidationError

from .errors import InvalidArgumentError
from .lie import LieContext, Membership

logger = logging.getLogger(__name__)


def elementary(d: int, i: int, j: int) -> np.ndarray:
    """Matrix unit ``E_ij`` (1-based indices)."""
    E = np.zeros((d, d))
    E[i - 1, j - 1] = 1.0
    return E


SO3_LX = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])
SO3_LY = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
SO3_LZ = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])


def so3_hat(w) -> np.ndarray:
    """Generator of the rotation with axis-angle vector ``w``."""
    x, y, z = w
    return x * SO3_LX + y * SO3_LY + z * SO3_LZ


def heisenberg() -> LieContext:
    return LieContext(
        name="heisenberg",
        dim=3,
        basis=(elementary(3, 1, 2), elementary(3, 2, 3), elementary(3, 1, 3)),
        membership=Membership.UNITRIANGULAR,
        nilpotency_class=2,
    )


def so3() -> LieContext:
    return LieContext(
        name="so3",
        dim=3,
        basis=(SO3_LX, SO3_LY, SO3_LZ),
        membership=Membership.SPECIAL_ORTHOGONAL,
    )


def general_linear(d: int) -> LieContext:
    basis = tuple(elementary(d, i, j) for i in range(1, d + 1) for j in range(1, d + 1))
    return LieContext(name=f"gl{d}", dim=d, basis=basis, membership=Membership.INVERTIBLE)


def diagonal(d: int = 2) -> LieContext:
    basis = tuple(elementary(d, i, i) for i in range(1, d + 1))
    return LieContext(
        name=f"diag{d}",
        dim=d,
        basis=basis,
        membership=Membership.POSITIVE_DIAGONAL,
        nilpotency_class=1,
    )


BUILTIN_CONTEXTS = {
    "heisenberg": heisenberg,
    "so3": so3,
    "gl2": lambda: general_linear(2),
    "gl3": lambda: general_linear(3),
    "diag2": lambda: diagonal(2),
}


def builtin_context(name: str) -> LieContext:
    try:
        factory = BUILTIN_CONTEXTS[name]
    except KeyError:
        raise InvalidArgumentError(
            f"Unknown context: {name} (built-ins: {', '.join(sorted(BUILTIN_CONTEXTS))})"
        ) from None
    return factory()


class ContextSpec(BaseModel):
    """On-disk description of a context."""

    name: str
    basis: list[list[list[float]]] = Field(min_length=1)
    membership: Membership = Membership.INVERTIBLE
    chart_radius: float = Field(default=0.9, gt=0)
    nilpotency_class: Optional[int] = Field(default=None, ge=1)

    def build(self) -> LieContext:
        mats = [np.array(b, dtype=float) for b in self.basis]
        d = mats[0].shape[0]
        return LieContext(
            name=self.name,
            dim=d,
            basis=tuple(mats),
            membership=self.membership,
            nilpotency_class=self.nilpotency_class,
            chart_radius=self.chart_radius,
        )

    @classmethod
    def from_context(cls, ctx: LieContext) -> "ContextSpec":
        return cls(
            name=ctx.name,
            basis=[b.tolist() for b in ctx.basis],
            membership=ctx.membership,
            chart_radius=ctx.chart_radius,
            nilpotency_class=ctx.nilpotency_class,
        )


def resolve_context_path(ref: str | Path, context_dir: str | Path | None = None) -> Path:
    """Resolve ``ref`` as a file path, or as ``<name>.yaml`` inside the context directory."""
    path = Path(ref)
    if path.exists():
        return path
    if context_dir is None:
        context_dir = os.environ.get("PRODINT_CONTEXT_DIR", "contexts")
    for suffix in ("", ".yaml", ".yml", ".json"):
        candidate = Path(context_dir) / f"{ref}{suffix}"
        if candidate.exists():
            return candidate
    raise FileNotFoundError(f"context file not found: {ref} (searched {context_dir})")


def load_context(ref: str | Path, context_dir: str | Path | None = None) -> LieContext:
    """Load a context definition file (YAML, or JSON which parses as YAML)."""
    path = resolve_context_path(ref, context_dir)
    with open(path) as f:
        raw = yaml.safe_load(f)
    if not isinstance(raw, dict):
        raise InvalidArgumentError(f"{path}: expected a mapping at the top level")
    try:
        spec = ContextSpec.model_validate(raw)
    except ValidationError as e:
        raise InvalidArgumentError(f"{path}: {e}") from e
    ctx = spec.build()
    logger.debug("Loaded context %s from %s (dim=%d)", ctx.name, path, ctx.dim)
    return ctx


def dump_context(ctx: LieContext, path: str | Path) -> Path:
    path = Path(path)
    data = ContextSpec.from_context(ctx).model_dump(mode="json")
    with open(path, "w") as f:
        yaml.safe_dump(data, f, sort_keys=False)
    return path


def resolve_context(ref: str, context_dir: str | Path | None = None) -> LieContext:
    """A context file, a file name in the context directory, or a built-in name."""
    try:
        return load_context(ref, context_dir)
    except FileNotFoundError:
        if ref in BUILTIN_CONTEXTS:
            logger.debug("No context file for %s, using the built-in definition", ref)
            return builtin_context(ref)
        raise
