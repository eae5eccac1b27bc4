"""Tests for adjoint transport, the Λ-scheme and the Duhamel series."""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.linalg import expm

from src.adjoint.scheme import TransportScheme, defect_decomposition, lambda_poly, transport_scheme
from src.adjoint.transport import (
    adjoint_ode_defect,
    duhamel_series,
    interleaved_bound_check,
    scheme_residual,
    residual_AI,
    solve_adjoint_equation,
    transport_curve,
    transport_exact,
)
from src.core.curves import ConstantCurve, PiecewiseCurve, random_algebra_element, random_smooth_curve
from src.core.errors import InvalidArgumentError, PreconditionError
from src.estimates.witness import constricted_constants


def conjugate(X, Y, t):
    g = expm(t * X)
    return g @ Y @ np.linalg.inv(g)


def test_lambda_poly_converges_to_conjugation(gl2, rng):
    X, Y = random_algebra_element(gl2, rng), random_algebra_element(gl2, rng)
    assert_allclose(lambda_poly(gl2, X, 30, 0.5, Y), conjugate(X, Y, 0.5), atol=1e-12)
    assert_allclose(lambda_poly(gl2, X, 0, 0.5, Y), Y)
    with pytest.raises(InvalidArgumentError):
        lambda_poly(gl2, X, -1, 0.5, Y)


def test_transport_of_constant_curve(gl3, rng, precise):
    X, Y = random_algebra_element(gl3, rng), random_algebra_element(gl3, rng)
    phi = ConstantCurve(X)
    assert_allclose(transport_exact(gl3, phi, Y, 0.7, precise), conjugate(X, Y, 0.7), atol=1e-12)
    assert_allclose(transport_exact(gl3, phi, Y, 0.0), Y)
    alpha = transport_curve(gl3, phi, Y, precise)
    assert_allclose(alpha(0.7), conjugate(X, Y, 0.7), atol=1e-12)
    assert_allclose(alpha.eval(0.7, 1), X @ alpha(0.7) - alpha(0.7) @ X, atol=1e-11)


def test_uniqueness_against_dense_solve(ctx, rng, precise):
    phi, Y = random_smooth_curve(ctx, rng), random_algebra_element(ctx, rng)
    times = [0.0, 0.3, 0.8, 1.0]
    solved = solve_adjoint_equation(ctx, phi, Y, times)
    for t, a in zip(times, solved):
        assert_allclose(a, transport_exact(ctx, phi, Y, t, precise), atol=1e-8)


def test_dense_solve_across_breakpoints(gl2, precise):
    X1 = np.array([[0.0, 1.0], [0.0, 0.0]])
    X2 = np.array([[0.0, 0.0], [1.0, 0.0]])
    pw = PiecewiseCurve.constant([0.0, 0.5, 1.0], [X1, X2])
    Y = np.array([[1.0, 0.0], [0.0, -1.0]])
    (end,) = solve_adjoint_equation(gl2, pw, Y, [1.0])
    expected = conjugate(X2, conjugate(X1, Y, 0.5), 0.5)
    assert_allclose(end, expected, atol=1e-9)


def test_adjoint_ode_defect_is_small(gl3, rng, precise):
    phi, psi = random_smooth_curve(gl3, rng), random_smooth_curve(gl3, rng)
    defect = adjoint_ode_defect(gl3, phi, psi, precise)
    for t in (0.0, 0.25, 0.5, 1.0):
        assert np.linalg.norm(defect(t), 2) < 1e-6


def test_ai_residual_of_exact_transport_vanishes(gl3, rng, precise):
    phi, Y = random_smooth_curve(gl3, rng), random_algebra_element(gl3, rng)
    alpha = transport_curve(gl3, phi, Y, precise)
    ai = residual_AI(gl3, phi, alpha, precise)
    assert np.max(np.abs(ai(1.0))) < 1e-8


def test_ai_residual_identity_for_scheme(ctx, rng, precise):
    phi, Y = random_smooth_curve(ctx, rng), random_algebra_element(ctx, rng)
    alpha = transport_scheme(ctx, phi, TransportScheme(n=8), Y).as_curve()
    assert scheme_residual(ctx, phi, alpha, cfg=precise) < 1e-8


def test_ai_residual_needs_matching_interval(gl2, rng):
    phi = random_smooth_curve(gl2, rng)
    with pytest.raises(InvalidArgumentError):
        residual_AI(gl2, phi, ConstantCurve(np.eye(2), (0.0, 2.0)))


def test_scheme_glues_continuously(gl3, rng):
    phi, Y = random_smooth_curve(gl3, rng), random_algebra_element(gl3, rng)
    transport = transport_scheme(gl3, phi, TransportScheme(n=8), Y)
    assert transport.endpoint_mismatch() == 0.0
    assert len(transport.node_values()) == 9
    assert_allclose(transport(0.0), Y)


def test_scheme_is_exact_for_constant_curves(gl2, rng):
    X, Y = random_algebra_element(gl2, rng), random_algebra_element(gl2, rng)
    transport = transport_scheme(gl2, ConstantCurve(X), TransportScheme(n=4, truncation=30), Y)
    for t in (0.1, 0.5, 1.0):
        assert_allclose(transport(t), conjugate(X, Y, t), atol=1e-12)


def test_scheme_converges(gl3, rng, precise):
    phi, Y = random_smooth_curve(gl3, rng), random_algebra_element(gl3, rng)
    exact = transport_curve(gl3, phi, Y, precise)
    times = phi.sample_times(17)

    def error(n):
        transport = transport_scheme(gl3, phi, TransportScheme(n=n), Y)
        return max(np.linalg.norm(transport(t) - exact(t), 2) for t in times)

    errors = [error(n) for n in (4, 8, 16, 32)]
    assert all(b < a for a, b in zip(errors, errors[1:]))
    assert errors[-1] < errors[0] / 4.0


def test_defect_decomposition(gl3, fam, rng):
    phi, Y = random_smooth_curve(gl3, rng), random_algebra_element(gl3, rng)
    transport = transport_scheme(gl3, phi, TransportScheme(n=8), Y)
    panels = defect_decomposition(gl3, fam, transport)
    assert len(panels) == 8
    for panel in panels:
        assert panel.defect <= panel.bound * (1.0 + 1e-12)
        assert panel.identity_gap < 1e-10


def test_duhamel_needs_witness(gl2, rng):
    X, Y = random_algebra_element(gl2, rng), random_algebra_element(gl2, rng)
    with pytest.raises(PreconditionError):
        duhamel_series(gl2, X, Y, 0.5, 1e-10)


def test_duhamel_series(ctx, fam, rng):
    X = random_algebra_element(ctx, rng, 0.8)
    Y = random_algebra_element(ctx, rng)
    witness = constricted_constants(ctx, fam, "op", [X], depth_max=4, samples=50)
    series, terms = duhamel_series(ctx, X, Y, -0.6, 1e-12, witness, fam)
    assert_allclose(series, conjugate(X, Y, -0.6), atol=1e-11)
    if ctx.nilpotency_class is not None:
        assert terms == ctx.nilpotency_class


def test_interleaved_bound(ctx, fam, rng, midpoint):
    report = interleaved_bound_check(ctx, fam, rng, cases=20, cfg=midpoint)
    assert report.passed
    assert report.samples == 20
    with pytest.raises(InvalidArgumentError):
        interleaved_bound_check(ctx, fam, rng, cases=0)


def test_transport_is_linear_in_y(ctx, rng, precise):
    phi = random_smooth_curve(ctx, rng)
    Y, Z = random_algebra_element(ctx, rng), random_algebra_element(ctx, rng)
    combined = transport_curve(ctx, phi, 2.0 * Y - 0.5 * Z, precise)
    alpha, beta = transport_curve(ctx, phi, Y, precise), transport_curve(ctx, phi, Z, precise)
    for t in (0.0, 0.3, 1.0):
        assert_allclose(combined(t), 2.0 * alpha(t) - 0.5 * beta(t), atol=1e-11)


def test_transport_converges_along_perturbed_y(gl3, rng, precise):
    phi = random_smooth_curve(gl3, rng)
    Y, Z = random_algebra_element(gl3, rng), random_algebra_element(gl3, rng)
    target = transport_curve(gl3, phi, Y, precise)
    gaps = []
    for n in (1, 10, 100, 1000):
        alpha = transport_curve(gl3, phi, Y + Z / n, precise)
        gaps.append(max(float(np.linalg.norm(alpha(t) - target(t), 2)) for t in (0.25, 0.5, 1.0)))
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] == pytest.approx(gaps[0] / 1000, rel=1e-6)


def test_duhamel_rejects_uncovered_x(gl2, fam, rng):
    X, Y = random_algebra_element(gl2, rng, 0.5), random_algebra_element(gl2, rng)
    witness = constricted_constants(gl2, fam, "op", [X], depth_max=3, samples=50)
    with pytest.raises(PreconditionError):
        duhamel_series(gl2, 2.0 * X, Y, 0.5, 1e-10, witness, fam)


def test_duhamel_error_within_claimed_remainder(rot, fam, rng):
    """The ball witness of so(3) has C = 1, so the tail bound is sharp enough to observe."""
    witness = constricted_constants(rot, fam, "op", ball_radius=1.0, depth_max=3, samples=100)
    X, Y = random_algebra_element(rot, rng, 0.9), random_algebra_element(rot, rng)
    previous = 0
    for tol in (1e-3, 1e-6, 1e-9):
        series, terms = duhamel_series(rot, X, Y, 1.0, tol, witness, fam)
        assert float(np.linalg.norm(series - conjugate(X, Y, 1.0), 2)) <= tol
        assert terms > previous
        previous = terms
