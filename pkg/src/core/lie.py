"""Matrix Lie groups and algebras.

A :class:`LieContext` fixes a matrix group ``G ⊆ GL(d)``, its Lie algebra
``g`` (the span of ``basis``) and the chart ``Ξ(g) = g - 1`` around the
identity. Algebra and group elements are plain ``d×d`` float arrays; the
public operations validate membership, the ``_unchecked`` helpers do not and
are what the steppers use in their inner loops.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import expm

from .errors import ChartDomainError, DomainError, InvalidArgumentError, SingularElementError

logger = logging.getLogger(__name__)

BASIS_TOL = 1e-12
GROUP_TOL = 1e-9


class Membership(str, Enum):
    INVERTIBLE = "invertible"
    UNIT_DETERMINANT = "unit-determinant"
    SPECIAL_ORTHOGONAL = "special-orthogonal"
    UNITRIANGULAR = "unitriangular"
    POSITIVE_DIAGONAL = "positive-diagonal"


@dataclass(frozen=True, eq=False)
class LieContext:
    name: str
    dim: int
    basis: tuple[np.ndarray, ...]
    membership: Membership = Membership.INVERTIBLE
    nilpotency_class: Optional[int] = None
    chart_radius: float = 0.9
    _coords_map: np.ndarray = field(init=False, repr=False)
    _basis_flat: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidArgumentError(f"dim must be positive, got {self.dim}")
        if not self.basis:
            raise InvalidArgumentError(f"context {self.name!r} has an empty basis")
        if self.chart_radius <= 0:
            raise InvalidArgumentError("chart_radius must be positive")
        basis = tuple(np.array(b, dtype=float) for b in self.basis)
        for b in basis:
            if b.shape != (self.dim, self.dim):
                raise InvalidArgumentError(
                    f"basis matrix of shape {b.shape} in a dim={self.dim} context"
                )
            b.setflags(write=False)
        flat = np.stack([b.reshape(-1) for b in basis], axis=1)
        if np.linalg.matrix_rank(flat) < len(basis):
            raise InvalidArgumentError(f"basis of {self.name!r} is linearly dependent")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "_basis_flat", flat)
        object.__setattr__(self, "_coords_map", np.linalg.pinv(flat))
        self._check_closure()
        if self.nilpotency_class is not None:
            self._check_nilpotency()

    # -- structure -----------------------------------------------------

    @property
    def algebra_dim(self) -> int:
        return len(self.basis)

    @property
    def identity(self) -> np.ndarray:
        return np.eye(self.dim)

    @property
    def is_abelian(self) -> bool:
        return self.nilpotency_class == 1

    @property
    def nilpotent_matrices(self) -> bool:
        """Every algebra element is a nilpotent matrix (power series terminate)."""
        return self.membership is Membership.UNITRIANGULAR

    def _check_closure(self):
        for a in self.basis:
            for b in self.basis:
                c = a @ b - b @ a
                residual = c.reshape(-1) - self._basis_flat @ (self._coords_map @ c.reshape(-1))
                if np.max(np.abs(residual), initial=0.0) > BASIS_TOL:
                    raise InvalidArgumentError(
                        f"basis of {self.name!r} is not closed under the bracket"
                    )

    def _check_nilpotency(self):
        c = self.nilpotency_class
        chains = list(self.basis)
        for _ in range(c):
            chains = [x @ y - y @ x for x in self.basis for y in chains]
        if any(np.max(np.abs(m), initial=0.0) > 0.0 for m in chains):
            raise InvalidArgumentError(
                f"context {self.name!r} declares nilpotency class {c} "
                "but an ad-chain of that length does not vanish"
            )

    # -- coordinates ---------------------------------------------------

    def coordinates(self, X: np.ndarray) -> np.ndarray:
        return self._coords_map @ np.asarray(X, dtype=float).reshape(-1)

    def from_coordinates(self, coords: Sequence[float]) -> np.ndarray:
        return (self._basis_flat @ np.asarray(coords, dtype=float)).reshape(self.dim, self.dim)

    def project(self, X: np.ndarray) -> np.ndarray:
        return self.from_coordinates(self.coordinates(X))

    def algebra_element(self, X, label: str = "X") -> np.ndarray:
        """Validate ``X`` as an element of the algebra; return it as a float array."""
        X = np.asarray(X, dtype=float)
        if X.shape != (self.dim, self.dim):
            raise DomainError(f"{label} has shape {X.shape}, expected {(self.dim, self.dim)}")
        P = self.project(X)
        scale = max(1.0, float(np.max(np.abs(X), initial=0.0)))
        if np.max(np.abs(P - X), initial=0.0) > BASIS_TOL * scale:
            raise DomainError(f"{label} is not in the algebra of {self.name!r}", X)
        return P

    def group_element(self, g, label: str = "g") -> np.ndarray:
        """Validate ``g`` against the membership predicate."""
        g = np.asarray(g, dtype=float)
        if g.shape != (self.dim, self.dim):
            raise DomainError(f"{label} has shape {g.shape}, expected {(self.dim, self.dim)}")
        if not self.is_member(g):
            raise DomainError(f"{label} violates {self.membership.value} membership", g)
        return g

    def is_member(self, g: np.ndarray, tol: float = GROUP_TOL) -> bool:
        det = np.linalg.det(g)
        if not np.isfinite(det) or abs(det) <= 1e-300:
            return False
        scale = max(1.0, float(np.max(np.abs(g))))
        m = self.membership
        if m is Membership.INVERTIBLE:
            return True
        if m is Membership.UNIT_DETERMINANT:
            return abs(det - 1.0) <= tol * scale**self.dim
        if m is Membership.SPECIAL_ORTHOGONAL:
            return bool(
                np.max(np.abs(g.T @ g - np.eye(self.dim))) <= tol and abs(det - 1.0) <= tol
            )
        if m is Membership.UNITRIANGULAR:
            lower = np.tril(g, -1)
            diag = np.diag(g)
            return bool(
                np.max(np.abs(lower), initial=0.0) <= tol * scale
                and np.max(np.abs(diag - 1.0)) <= tol * scale
            )
        if m is Membership.POSITIVE_DIAGONAL:
            off = g - np.diag(np.diag(g))
            return bool(np.max(np.abs(off)) <= tol * scale and np.all(np.diag(g) > 0))
        return False

    # -- fast paths used by the steppers ----------------------------------

    def exp_unchecked(self, X: np.ndarray) -> np.ndarray:
        if self.nilpotent_matrices:
            return _terminating_exp(X, self.dim)
        if self.membership is Membership.POSITIVE_DIAGONAL:
            return np.diag(np.exp(np.diag(X)))
        if self.membership is Membership.SPECIAL_ORTHOGONAL and self.dim == 3:
            return _rodrigues(X)
        return expm(X)

    def inverse_unchecked(self, g: np.ndarray, t: Optional[float] = None) -> np.ndarray:
        if self.membership is Membership.SPECIAL_ORTHOGONAL:
            return g.T.copy()
        try:
            inv = np.linalg.inv(g)
        except np.linalg.LinAlgError as e:
            raise SingularElementError(f"group value is singular: {e}", t=t) from e
        if not np.all(np.isfinite(inv)):
            raise SingularElementError("group value is numerically singular", t=t)
        return inv


def _terminating_exp(X: np.ndarray, d: int) -> np.ndarray:
    result = np.eye(d)
    term = np.eye(d)
    for k in range(1, d):
        term = term @ X / k
        if not np.any(term):
            break
        result = result + term
    return result


def _rodrigues(X: np.ndarray) -> np.ndarray:
    w = np.array([X[2, 1], X[0, 2], X[1, 0]])
    theta = math.sqrt(float(w @ w))
    K = X
    if theta < 1e-8:
        # Taylor coefficients of sin(θ)/θ and (1 - cos θ)/θ²
        a = 1.0 - theta**2 / 6.0
        b = 0.5 - theta**2 / 24.0
    else:
        a = math.sin(theta) / theta
        b = (1.0 - math.cos(theta)) / theta**2
    return np.eye(3) + a * K + b * (K @ K)


# -- operations ---------------------------------------------------------------


def _commutator(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    return X @ Y - Y @ X


def bracket(ctx: LieContext, X, Y) -> np.ndarray:
    """``[X, Y] = XY - YX`` projected onto the algebra."""
    X = ctx.algebra_element(X, "X")
    Y = ctx.algebra_element(Y, "Y")
    return ctx.project(_commutator(X, Y))


def ad_chain(ctx: LieContext, Xs: Sequence[np.ndarray], Y) -> np.ndarray:
    """``ad_{X_1} ∘ … ∘ ad_{X_n} (Y)``; the innermost bracket uses ``X_n``."""
    if len(Xs) == 0:
        raise InvalidArgumentError("ad_chain needs at least one operator")
    Xs = [ctx.algebra_element(X, f"Xs[{i}]") for i, X in enumerate(Xs)]
    Z = ctx.algebra_element(Y, "Y")
    for X in reversed(Xs):
        Z = _commutator(X, Z)
    return ctx.project(Z)


def ad_power(X: np.ndarray, k: int, Y: np.ndarray) -> np.ndarray:
    """``ad_X^k (Y)`` without validation."""
    Z = Y
    for _ in range(k):
        Z = _commutator(X, Z)
    return Z


def ad_matrix(ctx: LieContext, X) -> np.ndarray:
    """Matrix of ``ad_X`` in basis coordinates."""
    X = ctx.algebra_element(X)
    cols = [ctx.coordinates(_commutator(X, b)) for b in ctx.basis]
    return np.stack(cols, axis=1)


def adjoint(ctx: LieContext, g, Y) -> np.ndarray:
    """``Ad_g(Y) = g Y g^{-1}``.

    A singular ``g`` raises ``SingularElementError``; one that fails the
    membership predicate raises ``DomainError``.
    """
    g = np.asarray(g, dtype=float)
    if g.shape == (ctx.dim, ctx.dim):
        det = np.linalg.det(g)
        if not np.isfinite(det) or abs(det) <= 1e-300:
            raise SingularElementError("cannot conjugate by a singular g")
    g = ctx.group_element(g, "g")
    Y = ctx.algebra_element(Y, "Y")
    ginv = ctx.inverse_unchecked(g)
    return ctx.project(g @ Y @ ginv)


def exponential(ctx: LieContext, X) -> np.ndarray:
    """Matrix exponential; exact for nilpotent matrix algebras."""
    X = ctx.algebra_element(X)
    return ctx.exp_unchecked(X)


# -- chart --------------------------------------------------------------------


def _check_chart_vector(ctx: LieContext, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    radius = float(np.linalg.norm(x, 2))
    if radius >= ctx.chart_radius:
        raise ChartDomainError(
            f"chart vector of operator norm {radius:.6g} outside radius {ctx.chart_radius}", x
        )
    return x


def chart(ctx: LieContext, g) -> np.ndarray:
    """``Ξ(g) = g - 1``."""
    return _check_chart_vector(ctx, np.asarray(g, dtype=float) - np.eye(ctx.dim))


def chart_inverse(ctx: LieContext, x) -> np.ndarray:
    """``Ξ^{-1}(x) = 1 + x``."""
    return np.eye(ctx.dim) + _check_chart_vector(ctx, x)


def chart_omega(ctx: LieContext, x, X) -> np.ndarray:
    """``Ω(x, X) = X (1 + x)^{-1}``: the right logarithmic derivative read in the chart."""
    x = _check_chart_vector(ctx, x)
    X = np.asarray(X, dtype=float)
    try:
        # X (1+x)^{-1} = ((1+x)^{-T} X^T)^T
        return np.linalg.solve((np.eye(ctx.dim) + x).T, X.T).T
    except np.linalg.LinAlgError as e:
        raise ChartDomainError(f"1 + x is singular: {e}", x) from e


def chart_omega_inv(ctx: LieContext, x, X) -> np.ndarray:
    """``ω̃(x, X) = X (1 + x)``: the chart velocity of a curve with log-derivative X."""
    x = _check_chart_vector(ctx, x)
    X = np.asarray(X, dtype=float)
    return X @ (np.eye(ctx.dim) + x)


def chart_bound_factors(ctx: LieContext) -> tuple[float, float]:
    """Operator-norm constants ``(1 + ρ, 1/(1 - ρ))`` bounding ``ω̃`` and ``Ω`` on the chart ball."""
    r = ctx.chart_radius
    omega_bound = 1.0 / (1.0 - r) if r < 1.0 else math.inf
    return 1.0 + r, omega_bound
