"""Tests for splitting, substitution, product and inverse identities."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.core.curves import PiecewiseCurve, Reparametrization, random_algebra_element, random_polynomial_curve, random_smooth_curve
from src.core.errors import InvalidArgumentError
from src.prodint.evolve import evolve
from src.prodint.identities import (
    combine_inverse,
    combine_product,
    evolve_piecewise,
    inverse_curve,
    split_evolve,
    substitute,
    substitution_gap,
)


def rel(a, b):
    return np.linalg.norm(a - b, 2) / np.linalg.norm(a, 2)


def test_split(ctx, rng, precise):
    phi = random_smooth_curve(ctx, rng)
    whole = evolve(ctx, phi, cfg=precise).result
    assert rel(whole, split_evolve(ctx, phi, [0.0, 0.37, 1.0], precise)) < 1e-8
    assert rel(whole, split_evolve(ctx, phi, [0.0, 0.2, 0.5, 0.9, 1.0], precise)) < 1e-8


def test_split_rejects_bad_partitions(gl3, rng):
    phi = random_smooth_curve(gl3, rng)
    with pytest.raises(InvalidArgumentError):
        split_evolve(gl3, phi, [0.0, 0.5, 0.4, 1.0])
    with pytest.raises(InvalidArgumentError):
        split_evolve(gl3, phi, [0.5])
    with pytest.raises(InvalidArgumentError):
        split_evolve(gl3, phi, [0.0, 2.0])


def test_product(ctx, rng, precise):
    phi, psi = random_smooth_curve(ctx, rng), random_smooth_curve(ctx, rng)
    lhs = evolve(ctx, phi, cfg=precise).result @ evolve(ctx, psi, cfg=precise).result
    combined = combine_product(ctx, phi, psi, precise)
    assert rel(lhs, evolve(ctx, combined, cfg=precise).result) < 1e-7


def test_inverse(ctx, rng, precise):
    phi = random_smooth_curve(ctx, rng)
    inv = np.linalg.inv(evolve(ctx, phi, cfg=precise).result)
    assert rel(inv, evolve(ctx, combine_inverse(ctx, phi, precise), cfg=precise).result) < 1e-7
    assert rel(inv, evolve(ctx, inverse_curve(phi), cfg=precise).result) < 1e-8


def test_inverse_curve_values(gl2, rng):
    phi = random_smooth_curve(gl2, rng)
    rev = inverse_curve(phi)
    assert_allclose(rev(0.2), -phi(0.8))


def test_affine_substitution(ctx, rng, precise):
    phi = random_smooth_curve(ctx, rng)
    rho = Reparametrization.affine(0.5, 0.2, (0.0, 1.0))
    assert substitution_gap(ctx, phi, rho, 1.0, precise) < 1e-8
    assert substitution_gap(ctx, phi, rho, 0.6, precise) < 1e-8


def test_nonlinear_substitution(gl3, rng, precise):
    phi = random_smooth_curve(gl3, rng)
    rho = Reparametrization(lambda s: s * s, lambda s: 2.0 * s, (0.0, 1.0))
    assert substitute(gl3, phi, rho).order == 0
    assert substitution_gap(gl3, phi, rho, 1.0, precise) < 1e-7


def test_heisenberg_identities_are_exact(heis, rng, precise):
    for _ in range(5):
        phi = random_polynomial_curve(heis, rng, degree=1)
        whole = evolve(heis, phi, cfg=precise).result
        assert rel(whole, split_evolve(heis, phi, [0.0, 0.41, 1.0], precise)) < 1e-12
        inv = np.linalg.inv(whole)
        assert rel(inv, evolve(heis, inverse_curve(phi), cfg=precise).result) < 1e-12
        rho = Reparametrization.affine(0.5, 0.3, (0.0, 1.0))
        assert substitution_gap(heis, phi, rho, 1.0, precise) < 1e-12


def test_evolve_piecewise_matches_evolve(gl3, rng, precise):
    values = [random_algebra_element(gl3, rng) for _ in range(4)]
    pw = PiecewiseCurve.constant([0.0, 0.25, 0.5, 0.75, 1.0], values)
    assert_allclose(evolve_piecewise(gl3, pw, cfg=precise), evolve(gl3, pw, cfg=precise).result, atol=1e-12)
    assert_allclose(evolve_piecewise(gl3, pw, 0.0), np.eye(3))
    with pytest.raises(InvalidArgumentError):
        evolve_piecewise(gl3, pw, 1.5)
