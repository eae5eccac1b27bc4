"""Tests for Lie contexts, brackets, exponentials and the chart."""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.linalg import expm

from src.core.contexts import SO3_LX, SO3_LZ, elementary, so3_hat
from src.core.curves import random_algebra_element
from src.core.errors import ChartDomainError, DomainError, InvalidArgumentError, SingularElementError
from src.core.lie import (
    LieContext,
    Membership,
    ad_chain,
    ad_matrix,
    adjoint,
    bracket,
    chart,
    chart_bound_factors,
    chart_inverse,
    chart_omega,
    chart_omega_inv,
    exponential,
)


def test_bracket_antisymmetry_and_jacobi(ctx, rng):
    for _ in range(50):
        X, Y, Z = (random_algebra_element(ctx, rng) for _ in range(3))
        assert_allclose(bracket(ctx, X, Y), -bracket(ctx, Y, X), atol=1e-14)
        jacobi = (
            bracket(ctx, X, bracket(ctx, Y, Z))
            + bracket(ctx, Y, bracket(ctx, Z, X))
            + bracket(ctx, Z, bracket(ctx, X, Y))
        )
        assert np.max(np.abs(jacobi)) <= 1e-11


def test_bracket_rejects_non_members(heis):
    with pytest.raises(DomainError):
        bracket(heis, np.eye(3), elementary(3, 1, 2))


def test_heisenberg_chains_vanish(heis, rng):
    for _ in range(20):
        X1, X2, Y = (random_algebra_element(heis, rng) for _ in range(3))
        assert not np.any(ad_chain(heis, [X1, X2], Y))


def test_ad_chain_innermost_last(gl2):
    X1, X2, Y = elementary(2, 1, 2), elementary(2, 2, 1), elementary(2, 1, 1)
    expected = bracket(gl2, X1, bracket(gl2, X2, Y))
    assert_allclose(ad_chain(gl2, [X1, X2], Y), expected, atol=1e-15)


def test_ad_chain_needs_operators(gl2):
    with pytest.raises(InvalidArgumentError):
        ad_chain(gl2, [], np.eye(2))


def test_ad_matrix_matches_bracket(gl3, rng):
    X, Y = random_algebra_element(gl3, rng), random_algebra_element(gl3, rng)
    assert_allclose(ad_matrix(gl3, X) @ gl3.coordinates(Y), gl3.coordinates(bracket(gl3, X, Y)), atol=1e-13)


def test_heisenberg_exp_terminates(heis, rng):
    X = random_algebra_element(heis, rng, 2.0)
    assert_allclose(exponential(heis, X), np.eye(3) + X + X @ X / 2.0, atol=0)
    assert heis.is_member(exponential(heis, X))


def test_so3_exp_matches_expm(rot):
    for w in ([0.3, -1.2, 0.7], [1e-10, 0.0, 2e-10], [0.0, 0.0, np.pi]):
        X = so3_hat(w)
        assert_allclose(exponential(rot, X), expm(X), atol=1e-13)
        assert rot.is_member(exponential(rot, X))


def test_diagonal_exp(diag2):
    X = np.diag([0.5, -2.0])
    assert_allclose(exponential(diag2, X), np.diag(np.exp([0.5, -2.0])), rtol=1e-15)


def test_group_membership(rot):
    with pytest.raises(DomainError):
        rot.group_element(np.diag([1.0, 1.0, 2.0]))
    assert rot.is_member(expm(so3_hat([0.1, 0.2, 0.3])))


def test_adjoint_of_exponential(gl3, rng):
    X, Y = random_algebra_element(gl3, rng), random_algebra_element(gl3, rng)
    g = expm(X)
    assert_allclose(adjoint(gl3, g, Y), g @ Y @ np.linalg.inv(g), atol=1e-13)


def test_adjoint_rejects_singular_elements(rot, gl2):
    with pytest.raises(SingularElementError):
        adjoint(rot, np.zeros((3, 3)), SO3_LX)
    with pytest.raises(SingularElementError):
        adjoint(gl2, np.array([[1.0, 2.0], [2.0, 4.0]]), elementary(2, 1, 2))


def test_adjoint_rejects_non_members(rot):
    with pytest.raises(DomainError):
        adjoint(rot, np.diag([2.0, 1.0, 1.0]), SO3_LZ)


def test_adjoint_is_a_homomorphism(rot, rng):
    g = expm(so3_hat(rng.normal(size=3)))
    h = expm(so3_hat(rng.normal(size=3)))
    Y = random_algebra_element(rot, rng)
    assert_allclose(adjoint(rot, g @ h, Y), adjoint(rot, g, adjoint(rot, h, Y)), atol=1e-12)
    assert_allclose(adjoint(rot, g.T, adjoint(rot, g, Y)), Y, atol=1e-12)


def test_adjoint_derivative_is_bracket(gl3, rng):
    """Central differences of ``t ↦ Ad_{exp(tX)} Y`` converge to ``[X, Y]`` at second order."""
    X, Y = random_algebra_element(gl3, rng), random_algebra_element(gl3, rng)
    target = bracket(gl3, X, Y)

    def error(h):
        diff = (adjoint(gl3, expm(h * X), Y) - adjoint(gl3, expm(-h * X), Y)) / (2.0 * h)
        return float(np.max(np.abs(diff - target)))

    ratio = error(1e-2) / error(5e-3)
    assert 3.5 < ratio < 4.5


def test_chart_round_trip(gl2):
    x = np.array([[0.1, -0.2], [0.3, 0.05]])
    assert_allclose(chart(gl2, chart_inverse(gl2, x)), x, atol=1e-15)


def test_chart_radius_enforced(gl2):
    with pytest.raises(ChartDomainError):
        chart(gl2, 2.0 * np.eye(2))
    with pytest.raises(ChartDomainError):
        chart_inverse(gl2, 0.95 * np.eye(2))


def test_chart_omega_inverts_velocity(gl3, rng):
    x = random_algebra_element(gl3, rng, 0.5)
    X = random_algebra_element(gl3, rng)
    assert_allclose(chart_omega(gl3, x, chart_omega_inv(gl3, x, X)), X, atol=1e-13)


def test_chart_bound_factors(gl2):
    a, b = chart_bound_factors(gl2)
    assert a == pytest.approx(1.9)
    assert b == pytest.approx(10.0)


def test_context_rejects_open_basis():
    with pytest.raises(InvalidArgumentError, match="not closed"):
        LieContext(name="bad", dim=2, basis=(elementary(2, 1, 2), elementary(2, 2, 1)))


def test_context_rejects_wrong_nilpotency_class():
    basis = (elementary(3, 1, 2), elementary(3, 2, 3), elementary(3, 1, 3))
    with pytest.raises(InvalidArgumentError, match="nilpotency"):
        LieContext(name="bad", dim=3, basis=basis, membership=Membership.UNITRIANGULAR, nilpotency_class=1)


def test_context_rejects_dependent_basis():
    with pytest.raises(InvalidArgumentError, match="dependent"):
        LieContext(name="bad", dim=2, basis=(np.eye(2), 2.0 * np.eye(2)))
